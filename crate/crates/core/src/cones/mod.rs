//! Matrix-level admissibility for the k-Hessian: the constraint set
//! `Σ_k = { A : λ(A) ∈ closure(Γ_k) }`, its Dirichlet dual, the operator
//! `S_k(A) = σ_k(λ(A))`, and pointwise classical sub/supersolution tests for
//! `S_k(D²u) + λ u|u|^{k-1} = f`.

mod symeig;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_order, Error, Result};
use crate::symfun::{self, EigenSpectrum};

const SYMMETRY_TOL: f64 = 1e-12;
const MEMBERSHIP_EPS: f64 = 1e-10;
const INEQUALITY_EPS: f64 = 1e-12;

/// Dense symmetric `N×N` matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    entries: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    n: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    /// Validates dimensions, finiteness and symmetry (relative 1e-12), then
    /// stores the exactly symmetrized matrix.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("matrix dimension must be >= 1".into()));
        }
        if entries.len() != n * n {
            return Err(Error::Domain(format!("expected {} entries for n = {n}, got {}", n * n, entries.len())));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("matrix has non-finite entries".into()));
        }
        let scale = entries.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let mut sym = entries;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (sym[i * n + j], sym[j * n + i]);
                if (a - b).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::Domain(format!("matrix not symmetric at ({i},{j}): {a} vs {b}")));
                }
                let mean = 0.5 * (a + b);
                sym[i * n + j] = mean;
                sym[j * n + i] = mean;
            }
        }
        Ok(Self { n, entries: sym })
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, a: f64) -> Self {
        Self::diagonal(&vec![a; n])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut entries = vec![0.0; n * n];
        for (i, &d) in diag.iter().enumerate() {
            entries[i * n + i] = d;
        }
        Self { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn neg(&self) -> Self {
        Self { n: self.n, entries: self.entries.iter().map(|v| -v).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::Domain(format!("dimension mismatch {} vs {}", self.n, other.n)));
        }
        Ok(Self { n: self.n, entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect() })
    }

    /// `Qᵀ A Q` for a square `Q` given row-major.
    pub fn congruence(&self, q: &[f64]) -> Result<Self> {
        let n = self.n;
        if q.len() != n * n {
            return Err(Error::Domain("congruence factor has wrong size".into()));
        }
        let mut aq = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                aq[i * n + j] = (0..n).map(|k| self.get(i, k) * q[k * n + j]).sum();
            }
        }
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|k| q[k * n + i] * aq[k * n + j]).sum();
            }
        }
        Self::new(n, out)
    }

    /// Parses the `{"n": N, "entries": [row-major]}` JSON form.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: MatrixFile = serde_json::from_str(s)?;
        Self::new(file.n, file.entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&MatrixFile { n: self.n, entries: self.entries.clone() })
            .expect("matrix serialization is infallible")
    }
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn eigenvalues(a: &SymMatrix) -> Result<EigenSpectrum> {
    EigenSpectrum::new(symeig::decompose(a.n, &a.entries)?.values)
}

/// Eigenvalues with their orthonormal eigenvectors; column `j` of the
/// returned row-major matrix pairs with `values()[j]`.
pub fn eigen_decomposition(a: &SymMatrix) -> Result<(EigenSpectrum, Vec<f64>)> {
    let dec = symeig::decompose(a.n, &a.entries)?;
    Ok((EigenSpectrum::new(dec.values)?, dec.vectors))
}

/// The k-Hessian operator `S_k(A) = σ_k(λ(A))`.
pub fn s_k_op(a: &SymMatrix, k: usize) -> Result<f64> {
    check_order(k, a.n)?;
    symfun::sigma_k(&eigenvalues(a)?, k)
}

fn sigma_table(a: &SymMatrix, k: usize) -> Result<(Vec<f64>, f64)> {
    check_order(k, a.n)?;
    let spectrum = eigenvalues(a)?;
    Ok((symfun::elementary_symmetric(spectrum.values(), k), spectrum.norm_inf()))
}

/// `A ∈ Σ_k` (closed, `σ_j(λ(A)) >= -1e-10 (1+‖A‖)^j`) or `A ∈ Σ_k°` when `strict`.
pub fn in_sigma_k(a: &SymMatrix, k: usize, strict: bool) -> Result<bool> {
    let (e, norm) = sigma_table(a, k)?;
    Ok(symfun::gamma_test(&e, strict, |j| MEMBERSHIP_EPS * (1.0 + norm).powi(j as i32)))
}

/// `A ∈ Σ̃_k = (−Σ_k°)ᶜ`, the Dirichlet dual.
pub fn in_dual_sigma_k(a: &SymMatrix, k: usize) -> Result<bool> {
    Ok(!in_sigma_k(&a.neg(), k, true)?)
}

/// A second-order jet `(x, u(x), Du(x), D²u(x))` at a point.
#[derive(Debug, Clone)]
pub struct AdmissibleJet {
    pub point: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: SymMatrix,
}

impl AdmissibleJet {
    pub fn new(point: Vec<f64>, value: f64, gradient: Vec<f64>, hessian: SymMatrix) -> Result<Self> {
        let n = hessian.dim();
        if point.len() != n || gradient.len() != n {
            return Err(Error::Domain(format!(
                "jet dimensions disagree: point {}, gradient {}, hessian {n}",
                point.len(),
                gradient.len()
            )));
        }
        Ok(Self { point, value, gradient, hessian })
    }

    /// A jet at the origin carrying only value and Hessian.
    pub fn from_hessian(value: f64, hessian: SymMatrix) -> Self {
        let n = hessian.dim();
        Self { point: vec![0.0; n], value, gradient: vec![0.0; n], hessian }
    }
}

/// `S_k(D²φ) + λ φ|φ|^{k-1}` and the scale used for inequality slack.
fn eigen_operator(jet: &AdmissibleJet, lambda: f64, k: usize) -> Result<(f64, f64, bool)> {
    let (e, norm) = sigma_table(&jet.hessian, k)?;
    let s_k = e[k];
    let zero_order = lambda * jet.value * jet.value.abs().powi(k as i32 - 1);
    let admissible = symfun::gamma_test(&e, false, |j| MEMBERSHIP_EPS * (1.0 + norm).powi(j as i32));
    let scale = (1.0 + norm).powi(k as i32) + zero_order.abs();
    Ok((s_k + zero_order, scale, admissible))
}

/// Classical `Σ_k`-admissible subsolution test at a jet:
/// `S_k(H) + λ u|u|^{k-1} >= rhs` and `H ∈ Σ_k`.
pub fn classical_subsolution_at(jet: &AdmissibleJet, lambda: f64, k: usize, rhs: f64) -> Result<bool> {
    let (lhs, scale, admissible) = eigen_operator(jet, lambda, k)?;
    Ok(admissible && lhs >= rhs - INEQUALITY_EPS * scale)
}

/// Classical `Σ_k`-admissible supersolution test at a jet:
/// `S_k(H) + λ u|u|^{k-1} <= rhs` or `H ∉ Σ_k`.
pub fn classical_supersolution_at(jet: &AdmissibleJet, lambda: f64, k: usize, rhs: f64) -> Result<bool> {
    let (lhs, scale, admissible) = eigen_operator(jet, lambda, k)?;
    Ok(!admissible || lhs <= rhs + INEQUALITY_EPS * scale)
}
