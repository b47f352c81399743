//! Radial calculus for `S_k`: for `w(x) = h(|x - x0|)` the Hessian has
//! eigenvalue `h''(r)` once and `h'(r)/r` with multiplicity `N - 1`, so
//!
//! `S_k(D²w) = C(N-1,k-1) (h'/r)^{k-1} [h'' + (h'/r)(N-k)/k]`.
//!
//! Also hosts sampled radial profiles and the radial comparison/test functions
//! used by the barrier and upper-bound arguments.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{check_order, Error, Result};
use crate::symfun::{binomial, EigenSpectrum};

/// Nodes used by [`exp_barrier_profile`] on the annulus `[δ/2, δ]`.
pub const EXP_BARRIER_NODES: usize = 129;

/// A sampled radial function `h` on `[r_0, R]` with first and second derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub radius: f64,
    pub dim: usize,
    pub order: usize,
    pub grid: Vec<f64>,
    pub h: Vec<f64>,
    pub hp: Vec<f64>,
    pub hpp: Vec<f64>,
    /// Set when the profile is certified k-convex at every interior node.
    #[serde(default)]
    pub k_convex: bool,
}

impl RadialProfile {
    pub fn new(dim: usize, order: usize, grid: Vec<f64>, h: Vec<f64>, hp: Vec<f64>, hpp: Vec<f64>) -> Result<Self> {
        check_order(order, dim)?;
        if grid.len() < 2 {
            return Err(Error::Domain("a profile needs at least two nodes".into()));
        }
        if grid[0] < 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("grid must be non-negative and strictly increasing".into()));
        }
        let m = grid.len();
        if h.len() != m || hp.len() != m || hpp.len() != m {
            return Err(Error::Domain("grid and value arrays differ in length".into()));
        }
        if [&h, &hp, &hpp].iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::Domain("profile contains non-finite samples".into()));
        }
        let radius = grid[m - 1];
        Ok(Self { radius, dim, order, grid, h, hp, hpp, k_convex: false })
    }

    /// Samples a closed form `r ↦ (h, h', h'')`.
    pub fn from_fn(dim: usize, order: usize, grid: Vec<f64>, f: impl Fn(f64) -> (f64, f64, f64)) -> Result<Self> {
        let (mut h, mut hp, mut hpp) = (Vec::new(), Vec::new(), Vec::new());
        for &r in &grid {
            let (a, b, c) = f(r);
            h.push(a);
            hp.push(b);
            hpp.push(c);
        }
        Self::new(dim, order, grid, h, hp, hpp)
    }

    /// Builds derivatives by second-order finite differences (one-sided at the
    /// ends). When the grid starts at the origin, `h` is treated as even.
    pub fn from_values(dim: usize, order: usize, grid: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if grid.len() < 3 {
            return Err(Error::Domain("finite differences need at least three nodes".into()));
        }
        let mut hp = first_derivative(&grid, &h);
        if grid[0] == 0.0 {
            hp[0] = 0.0;
        }
        let hpp = derivative_of_radial_slope(&grid, &hp);
        Self::new(dim, order, grid, h, hp, hpp)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Spectrum of `D²w` at node `i`, using the origin limit `h'/r → h''` at `r = 0`.
    pub fn spectrum_at(&self, i: usize) -> Result<EigenSpectrum> {
        let r = self.grid[i];
        if r == 0.0 {
            radial_origin_spectrum(self.hpp[i], self.dim)
        } else {
            radial_hessian_spectrum(self.hp[i], self.hpp[i], r, self.dim)
        }
    }

    /// `S_j` at node `i` (origin-aware).
    pub fn s_j_at(&self, i: usize, j: usize) -> Result<f64> {
        let r = self.grid[i];
        if r == 0.0 {
            s_k_radial_origin(self.hpp[i], self.dim, j)
        } else {
            s_k_radial(self.hp[i], self.hpp[i], r, self.dim, j)
        }
    }

    pub fn s_k_at(&self, i: usize) -> Result<f64> {
        self.s_j_at(i, self.order)
    }

    /// `(1 + |h'/r| + |h''|)^k`, the scale applied to residual tolerances.
    pub fn scale_at(&self, i: usize) -> f64 {
        let slope = if self.grid[i] == 0.0 { self.hpp[i] } else { self.hp[i] / self.grid[i] };
        (1.0 + slope.abs() + self.hpp[i].abs()).powi(self.order as i32)
    }

    /// Closed-cone `Γ_k` membership of the radial spectrum at node `i`, with
    /// slack `tol · scale`.
    pub fn k_convex_at(&self, i: usize, tol: f64) -> Result<bool> {
        let slack = tol * self.scale_at(i);
        for j in 1..=self.order {
            if self.s_j_at(i, j)? < -slack {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn sup_norm(&self) -> f64 {
        self.h.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Minimum value and the node attaining it.
    pub fn min(&self) -> (f64, usize) {
        self.h
            .iter()
            .enumerate()
            .fold((f64::INFINITY, 0), |(m, at), (i, &v)| if v < m { (v, i) } else { (m, at) })
    }

    /// `c · h` with derivatives scaled alike.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for v in out.h.iter_mut().chain(out.hp.iter_mut()).chain(out.hpp.iter_mut()) {
            *v *= c;
        }
        if c < 0.0 {
            out.k_convex = false;
        }
        out
    }

    /// CSV with header `r,h,hp,hpp`; values carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,h,hp,hpp\n");
        for i in 0..self.len() {
            writeln!(s, "{:.16e},{:.16e},{:.16e},{:.16e}", self.grid[i], self.h[i], self.hp[i], self.hpp[i])
                .expect("writing to a String cannot fail");
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serialization is infallible")
    }

    /// Reads the `r,h,hp,hpp` CSV written by [`RadialProfile::to_csv`].
    pub fn from_csv(dim: usize, order: usize, text: &str) -> Result<Self> {
        let mut cols: [Vec<f64>; 4] = Default::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('r')) {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            if vals.len() != 4 {
                return Err(Error::Parse(format!("line {}: expected 4 columns", lineno + 1)));
            }
            for (c, v) in cols.iter_mut().zip(vals) {
                c.push(v);
            }
        }
        let [grid, h, hp, hpp] = cols;
        Self::new(dim, order, grid, h, hp, hpp)
    }

    /// Piecewise-linear value of `h` at `r`, clamped to the grid.
    pub fn value_at(&self, r: f64) -> f64 {
        let j = self.grid.partition_point(|&x| x <= r);
        if j == 0 {
            self.h[0]
        } else if j == self.len() {
            self.h[self.len() - 1]
        } else {
            let t = (r - self.grid[j - 1]) / (self.grid[j] - self.grid[j - 1]);
            self.h[j - 1] + t * (self.h[j] - self.h[j - 1])
        }
    }
}

/// Second-order first derivative on a non-uniform grid; one-sided three-point
/// stencils at both ends.
pub fn first_derivative(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert!(n >= 3 && f.len() == n, "need at least three samples");
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (h1, h2) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        d[i] = -h2 / (h1 * (h1 + h2)) * f[i - 1] + (h2 - h1) / (h1 * h2) * f[i] + h1 / (h2 * (h1 + h2)) * f[i + 1];
    }
    let (h1, h2) = (x[1] - x[0], x[2] - x[1]);
    d[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] - h1 / (h2 * (h1 + h2)) * f[2];
    let (h1, h2) = (x[n - 2] - x[n - 3], x[n - 1] - x[n - 2]);
    d[n - 1] = h2 / (h1 * (h1 + h2)) * f[n - 3] - (h1 + h2) / (h1 * h2) * f[n - 2]
        + (h1 + 2.0 * h2) / (h2 * (h1 + h2)) * f[n - 1];
    d
}

/// Differentiates a radial slope `h'` sampled on `x`. At `x[0] = 0` the odd
/// extension `h'(-r) = -h'(r)` gives the centered value `h'(r_1)/r_1`.
pub(crate) fn derivative_of_radial_slope(x: &[f64], hp: &[f64]) -> Vec<f64> {
    let mut d = first_derivative(x, hp);
    if x[0] == 0.0 {
        d[0] = hp[1] / x[1];
    }
    d
}

/// Spectrum of the Hessian of a radial function at `r > 0`.
pub fn radial_hessian_spectrum(hp: f64, hpp: f64, r: f64, n: usize) -> Result<EigenSpectrum> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radial spectrum needs r > 0, got {r}")));
    }
    if n == 0 {
        return Err(Error::Domain("dimension must be >= 1".into()));
    }
    let mut values = vec![hp / r; n - 1];
    values.push(hpp);
    EigenSpectrum::new(values)
}

/// Origin limit for smooth radial functions: `D²w(0) = h''(0) I`.
pub fn radial_origin_spectrum(hpp0: f64, n: usize) -> Result<EigenSpectrum> {
    EigenSpectrum::new(vec![hpp0; n])
}

/// `S_k` of a radial function at `r > 0`, in the factored form
/// `C(N-1,k-1)(h'/r)^{k-1}[h'' + (h'/r)(N-k)/k]`.
pub fn s_k_radial(hp: f64, hpp: f64, r: f64, n: usize, k: usize) -> Result<f64> {
    check_order(k, n)?;
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radial S_k needs r > 0, got {r}")));
    }
    let slope = hp / r;
    Ok(binomial(n - 1, k - 1) * slope.powi(k as i32 - 1) * (hpp + slope * (n - k) as f64 / k as f64))
}

/// `S_k` of a radial function at `r > 0`, in the expanded form
/// `h''(h'/r)^{k-1} C(N-1,k-1) + (h'/r)^k C(N-1,k)`.
pub fn s_k_radial_expanded(hp: f64, hpp: f64, r: f64, n: usize, k: usize) -> Result<f64> {
    check_order(k, n)?;
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radial S_k needs r > 0, got {r}")));
    }
    let slope = hp / r;
    Ok(hpp * slope.powi(k as i32 - 1) * binomial(n - 1, k - 1) + slope.powi(k as i32) * binomial(n - 1, k))
}

/// `S_k` at the origin of a smooth radial function: `C(N,k) h''(0)^k`.
pub fn s_k_radial_origin(hpp0: f64, n: usize, k: usize) -> Result<f64> {
    check_order(k, n)?;
    Ok(binomial(n, k) * hpp0.powi(k as i32))
}

/// `S_j` of `h(r) = c + Cρ r^α`:
/// `(Cρ α r^{α-2})^j (N-1)!/(j!(N-j)!) [(α-2) j + N]`.
pub fn s_j_radial_power(c_rho: f64, alpha: f64, r: f64, n: usize, j: usize) -> Result<f64> {
    check_order(j, n)?;
    if !(r > 0.0) {
        return Err(Error::Domain(format!("power-law S_j needs r > 0, got {r}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("exponent must lie in (0, 1], got {alpha}")));
    }
    // (N-1)!/(j!(N-j)!) = C(N-1, j-1) / j
    let coeff = binomial(n - 1, j - 1) / j as f64;
    Ok((c_rho * alpha * r.powf(alpha - 2.0)).powi(j as i32) * coeff * ((alpha - 2.0) * j as f64 + n as f64))
}

/// Uniform grid with `cells` cells on `[a, b]`.
pub fn uniform_grid(a: f64, b: f64, cells: usize) -> Vec<f64> {
    let step = (b - a) / cells as f64;
    let mut g: Vec<f64> = (0..=cells).map(|i| a + i as f64 * step).collect();
    g[cells] = b;
    g
}

/// The quartic `u = -(R² - r²)²/4` with `h' = r(R² - r²)` and `h'' = R² - 3r²`.
pub fn quartic_test_profile(radius: f64, n: usize, k: usize, grid_size: usize) -> Result<RadialProfile> {
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {radius}")));
    }
    let r2 = radius * radius;
    RadialProfile::from_fn(n, k, uniform_grid(0.0, radius, grid_size.max(2)), |r| {
        let s = r2 - r * r;
        (-0.25 * s * s, r * s, r2 - 3.0 * r * r)
    })
}

/// Amplitudes, rates and tube widths for the boundary barriers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BarrierParams {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub big_m: f64,
    /// Exponential rate of the interior-ball barrier.
    pub m: f64,
    /// Exponential/logarithmic rate of the distance barriers.
    pub t: f64,
    pub delta: f64,
    pub d0: f64,
    pub rho: f64,
}

impl BarrierParams {
    /// Smallest admissible-excluded rate: the barrier needs `m > 2(N-k)/(kδ)`.
    pub fn min_rate(n: usize, k: usize, delta: f64) -> f64 {
        2.0 * (n - k) as f64 / (k as f64 * delta)
    }
}

/// `w(r) = C0 (e^{-mδ} - e^{-mr})` on the annulus `[δ/2, δ]` around an interior
/// ball centre.
///
/// With `C0 > 0` (the reading under which `w <= 0` on the annulus) every node
/// has `S_k(D²w) = C0^k m^k e^{-mkr} r^{-k} C(N-1,k-1) [(N-k)/k - m r] < 0`.
/// A negative `C0` is accepted as a free parameter; the sign of `S_k` is then
/// `(-1)^k` times the above.
pub fn exp_barrier_profile(params: &BarrierParams, n: usize, k: usize) -> Result<RadialProfile> {
    check_order(k, n)?;
    let BarrierParams { c0, m, delta, .. } = *params;
    if !(delta > 0.0) {
        return Err(Error::Precondition(format!("tube width delta must be positive, got {delta}")));
    }
    if !(m > 0.0) || !(m > BarrierParams::min_rate(n, k, delta)) {
        return Err(Error::Precondition(format!(
            "rate m = {m} must exceed 2(N-k)/(k delta) = {}",
            BarrierParams::min_rate(n, k, delta)
        )));
    }
    if c0 == 0.0 || !c0.is_finite() {
        return Err(Error::Precondition("amplitude C0 must be finite and non-zero".into()));
    }
    let grid = uniform_grid(0.5 * delta, delta, EXP_BARRIER_NODES - 1);
    RadialProfile::from_fn(n, k, grid, |r| {
        let e = (-m * r).exp();
        (c0 * ((-m * delta).exp() - e), c0 * m * e, -c0 * m * m * e)
    })
}

/// Outcome of the boundary-slope harness for a negative radial profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfReport {
    pub params: BarrierParams,
    /// `max S_k` of the barrier over the annulus; negative when it is a strict supersolution.
    pub barrier_s_k_max: f64,
    /// `min (w - ψ)` along the ray through the tangency point.
    pub comparison_margin: f64,
    /// `min (-C1 d - ψ)` for `0 < d ≤ δ/2`.
    pub slope_margin: f64,
    pub pass: bool,
}

/// Interior-ball barrier test near `r = R` for a radial `ψ ≤ 0` that vanishes
/// on the boundary.
///
/// The ball `B_δ(z0)` with `|z0| = R - δ` touches the boundary; `C0` is the
/// smallest amplitude with `w ≥ ψ` on `|x - z0| = δ/2`, and the report checks
/// `ψ ≤ w` and `ψ ≤ -C1 d` along the ray through the tangency point, with
/// `C1 = m C0 e^{-mδ}`.
pub fn verify_hopf(psi: &RadialProfile, delta: f64, m: f64) -> Result<HopfReport> {
    let (n, k, big_r) = (psi.dim, psi.order, psi.radius);
    if !(delta > 0.0 && delta <= big_r) {
        return Err(Error::Domain(format!("need 0 < delta <= R, got {delta}")));
    }
    let inner = -psi.value_at(big_r - 0.5 * delta);
    if !(inner > 0.0) {
        return Err(Error::Precondition("profile must be negative at distance delta/2 from the boundary".into()));
    }
    let c0 = inner / ((-0.5 * m * delta).exp() - (-m * delta).exp());
    let mut params = BarrierParams { c0, m, delta, ..Default::default() };
    params.c1 = m * c0 * (-m * delta).exp();
    let barrier = exp_barrier_profile(&params, n, k)?;
    let mut barrier_s_k_max = f64::NEG_INFINITY;
    for i in 0..barrier.len() {
        barrier_s_k_max = barrier_s_k_max.max(barrier.s_k_at(i)?);
    }
    let (mut comparison_margin, mut slope_margin) = (f64::INFINITY, f64::INFINITY);
    for (&r, &h) in psi.grid.iter().zip(&psi.h) {
        let d = big_r - r;
        if d > 0.0 && d <= 0.5 * delta {
            let w = c0 * ((-m * delta).exp() - (-m * (delta - d)).exp());
            comparison_margin = comparison_margin.min(w - h);
            slope_margin = slope_margin.min(-params.c1 * d - h);
        }
    }
    let pass = barrier_s_k_max < 0.0 && comparison_margin >= 0.0 && slope_margin >= 0.0;
    Ok(HopfReport { params, barrier_s_k_max, comparison_margin, slope_margin, pass })
}
