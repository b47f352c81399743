//! Elementary symmetric polynomials and the open Garding cones
//! `Γ_k = { λ : σ_j(λ) > 0, j = 1..k }`.

use serde::{Deserialize, Serialize};

use crate::error::{check_order, Error, Result};
use crate::poly;

/// An ordered real N-vector of eigenvalues (ascending, finite, non-empty).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EigenSpectrum {
    values: Vec<f64>,
}

impl EigenSpectrum {
    /// Builds a spectrum from arbitrary-order entries; they are sorted ascending.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("spectrum must have at least one entry".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite spectrum entry {bad}")));
        }
        values.sort_by(|a, b| a.total_cmp(b));
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Largest absolute entry.
    pub fn norm_inf(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }
}

impl TryFrom<Vec<f64>> for EigenSpectrum {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EigenSpectrum> for Vec<f64> {
    fn from(s: EigenSpectrum) -> Self {
        s.values
    }
}

/// `(σ_1, ..., σ_N)` of a vector, with the convention `σ_0 = 1` left implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaVector {
    sigmas: Vec<f64>,
}

impl SigmaVector {
    /// `σ_j` for `1 <= j <= N`; `get(0)` returns 1.
    pub fn get(&self, j: usize) -> f64 {
        if j == 0 {
            1.0
        } else {
            self.sigmas[j - 1]
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }
}

/// Coefficients `e_0 = 1, e_1, ..., e_m` of `prod_i (x + v_i)` read from the top,
/// truncated at degree `m`. O(N m).
pub fn elementary_symmetric(values: &[f64], m: usize) -> Vec<f64> {
    let m = m.min(values.len());
    let mut e = vec![0.0; m + 1];
    e[0] = 1.0;
    for (i, &v) in values.iter().enumerate() {
        let top = m.min(i + 1);
        for j in (1..=top).rev() {
            e[j] += v * e[j - 1];
        }
    }
    e
}

/// `σ_k` of an unordered slice; `k = 0` gives 1 and `k > len` gives 0.
pub fn sigma_of(values: &[f64], k: usize) -> f64 {
    if k > values.len() {
        return 0.0;
    }
    elementary_symmetric(values, k)[k]
}

/// The k-th elementary symmetric function `σ_k(λ)`.
pub fn sigma_k(lambda: &EigenSpectrum, k: usize) -> Result<f64> {
    check_order(k, lambda.dim())?;
    Ok(sigma_of(lambda.values(), k))
}

/// All of `σ_1(λ), ..., σ_N(λ)` in one pass.
pub fn sigma_all(lambda: &EigenSpectrum) -> SigmaVector {
    let e = elementary_symmetric(lambda.values(), lambda.dim());
    SigmaVector { sigmas: e[1..].to_vec() }
}

/// Membership in `Γ_k` (strict) or its closure (`strict = false`).
pub fn in_gamma_k(lambda: &EigenSpectrum, k: usize, strict: bool) -> Result<bool> {
    in_gamma_k_with_slack(lambda, k, strict, 0.0)
}

/// As [`in_gamma_k`], with closed-mode tests relaxed to `σ_j >= -slack`.
/// Strict mode ignores the slack.
pub fn in_gamma_k_with_slack(lambda: &EigenSpectrum, k: usize, strict: bool, slack: f64) -> Result<bool> {
    check_order(k, lambda.dim())?;
    if slack < 0.0 || !slack.is_finite() {
        return Err(Error::Domain(format!("slack must be finite and >= 0, got {slack}")));
    }
    Ok(gamma_test(&elementary_symmetric(lambda.values(), k), strict, |_| slack))
}

/// Checks `σ_1..σ_k` from a precomputed table `e` (with `e[0] = 1`) against
/// per-degree slacks.
pub(crate) fn gamma_test(e: &[f64], strict: bool, slack: impl Fn(usize) -> f64) -> bool {
    e.iter().enumerate().skip(1).all(|(j, &s)| if strict { s > 0.0 } else { s >= -slack(j) })
}

/// Membership in `Γ_k` through Korevaar's characterization: `σ_k > 0` and every
/// mixed partial `∂^m σ_k / ∂λ_{i_1}..∂λ_{i_m}` (distinct indices, `m <= k-1`)
/// is positive. The mixed partial over an index set `I` equals `σ_{k-m}` of the
/// entries outside `I`.
pub fn in_gamma_k_korevaar(lambda: &EigenSpectrum, k: usize) -> Result<bool> {
    let n = lambda.dim();
    check_order(k, n)?;
    let values = lambda.values();
    let mut rest = Vec::with_capacity(n);
    for m in 0..k {
        let mut ok = true;
        for_each_subset(n, m, |removed| {
            rest.clear();
            let mut next = 0;
            for (i, &v) in values.iter().enumerate() {
                if next < removed.len() && removed[next] == i {
                    next += 1;
                } else {
                    rest.push(v);
                }
            }
            if sigma_of(&rest, k - m) <= 0.0 {
                ok = false;
            }
            ok
        });
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Visits every increasing `m`-subset of `0..n`; stops early when `visit` returns false.
fn for_each_subset(n: usize, m: usize, mut visit: impl FnMut(&[usize]) -> bool) {
    if m > n {
        return;
    }
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        if !visit(&idx) {
            return;
        }
        let mut i = m;
        while i > 0 && idx[i - 1] == n - m + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..m {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Binomial coefficient as a float; exact for the sizes used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

/// Coefficients (ascending powers of `t`) of `t ↦ σ_k(t·(1,..,1) + λ)`:
/// `σ_k(λ + t·1) = Σ_j C(N-j, k-j) σ_j(λ) t^{k-j}`.
pub fn garding_polynomial(lambda: &EigenSpectrum, k: usize) -> Result<Vec<f64>> {
    let n = lambda.dim();
    check_order(k, n)?;
    let e = elementary_symmetric(lambda.values(), k);
    // coefficient of t^{k-j} is C(N-j, k-j) e_j
    let mut coeffs = vec![0.0; k + 1];
    for (j, &ej) in e.iter().enumerate() {
        coeffs[k - j] = binomial(n - j, k - j) * ej;
    }
    Ok(coeffs)
}

/// Checks numerically that `t ↦ σ_k(t·1 + λ)` has `k` real roots (Garding
/// hyperbolicity in the direction `(1,..,1)`). Roots count as real when their
/// imaginary part is below `1e-9·(1 + ‖λ‖∞)`. The root finder is restarted
/// from rotated initial guesses up to `trials` times (at least once) before
/// non-convergence is reported.
pub fn garding_roots_real(lambda: &EigenSpectrum, k: usize, trials: usize) -> Result<bool> {
    let coeffs = garding_polynomial(lambda, k)?;
    let tol = 1e-9 * (1.0 + lambda.norm_inf());
    let mut last_err = None;
    for attempt in 0..trials.max(1) {
        match poly::roots_with_offset(&coeffs, 0.4 + 0.7 * attempt as f64) {
            Ok(rts) => return Ok(rts.len() == k && rts.iter().all(|z| z.im.abs() <= tol)),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}
