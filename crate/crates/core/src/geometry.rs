//! Boundary convexity: principal curvature samples, strict (k-1)-convexity,
//! the augmentation parameter `R`, distance-function Hessians in principal
//! coordinates and the `g ∘ d` barrier calculus.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cones::{eigenvalues, SymMatrix};
use crate::error::{Error, Result};
use crate::symfun::{elementary_symmetric, sigma_of, EigenSpectrum};

/// Distances sampled strictly inside `(0, d0)` by the barrier verifiers.
pub const TUBE_NODES: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSample {
    pub point: Vec<f64>,
    pub kappa: Vec<f64>,
}

/// Principal curvatures `κ_1..κ_{N-1}` at sampled boundary points.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    dim: usize,
    samples: Vec<CurvatureSample>,
}

impl CurvatureField {
    pub fn new(dim: usize, samples: Vec<CurvatureSample>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Domain("a boundary needs ambient dimension N >= 2".into()));
        }
        if samples.is_empty() {
            return Err(Error::Domain("curvature field has no samples".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.kappa.len() != dim - 1 {
                return Err(Error::Domain(format!(
                    "sample {i} has {} curvatures, expected N - 1 = {}",
                    s.kappa.len(),
                    dim - 1
                )));
            }
            if s.kappa.iter().chain(&s.point).any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("sample {i} has non-finite data")));
            }
        }
        Ok(Self { dim, samples })
    }

    /// Field with the given curvature vector at a single unnamed point.
    pub fn uniform(kappa: Vec<f64>) -> Result<Self> {
        let dim = kappa.len() + 1;
        Self::new(dim, vec![CurvatureSample { point: Vec::new(), kappa }])
    }

    /// Sphere of radius `radius` in `ℝ^N`, sampled at `±R e_i`.
    pub fn sphere(dim: usize, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Domain(format!("sphere radius must be positive, got {radius}")));
        }
        let samples = (0..2 * dim)
            .map(|s| {
                let mut point = vec![0.0; dim];
                point[s / 2] = if s % 2 == 0 { radius } else { -radius };
                CurvatureSample { point, kappa: vec![1.0 / radius; dim.saturating_sub(1)] }
            })
            .collect();
        Self::new(dim, samples)
    }

    /// Ellipse (`N = 2`) or ellipsoid (`N = 3`) with the given semi-axes,
    /// sampled at `count` points. Curvatures come from the shape operator
    /// of `Σ x_i²/a_i² = 1`.
    pub fn ellipsoid(semi_axes: &[f64], count: usize) -> Result<Self> {
        let dim = semi_axes.len();
        if semi_axes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::Domain("semi-axes must be positive".into()));
        }
        if count == 0 {
            return Err(Error::Domain("need at least one sample point".into()));
        }
        let points: Vec<Vec<f64>> = match dim {
            2 => (0..count)
                .map(|i| {
                    let u = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
                    vec![semi_axes[0] * u.cos(), semi_axes[1] * u.sin()]
                })
                .collect(),
            3 => {
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                (0..count)
                    .map(|i| {
                        let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                        let rho = (1.0 - z * z).sqrt();
                        let phi = golden * i as f64;
                        vec![semi_axes[0] * rho * phi.cos(), semi_axes[1] * rho * phi.sin(), semi_axes[2] * z]
                    })
                    .collect()
            }
            _ => return Err(Error::Domain(format!("ellipsoid generator supports N = 2 or 3, got {dim}"))),
        };
        let samples = points
            .into_iter()
            .map(|p| {
                let kappa = quadric_curvatures(semi_axes, &p)?;
                Ok(CurvatureSample { point: p, kappa })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dim, samples)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let samples: Vec<CurvatureSample> = serde_json::from_str(s)?;
        let dim = samples.first().map(|s| s.kappa.len() + 1).unwrap_or(0);
        Self::new(dim, samples)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.samples).expect("curvature samples serialize")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> &[CurvatureSample] {
        &self.samples
    }

    /// `μ = max |κ_i|` over all samples.
    pub fn mu(&self) -> f64 {
        self.samples.iter().flat_map(|s| &s.kappa).fold(0.0, |m, k| m.max(k.abs()))
    }
}

/// Principal curvatures of `Σ x_i²/a_i² = 1` at `p`, positive for the
/// inward normal.
fn quadric_curvatures(a: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    let grad: Vec<f64> = (0..n).map(|i| 2.0 * p[i] / (a[i] * a[i])).collect();
    let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    let normal: Vec<f64> = grad.iter().map(|g| g / gnorm).collect();

    // orthonormal tangent basis by Gram-Schmidt against the normal
    let mut basis: Vec<Vec<f64>> = vec![normal];
    for e in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[e] = 1.0;
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    let tangents = &basis[1..];
    let m = tangents.len();
    let mut w = vec![0.0; m * m];
    for (i, ti) in tangents.iter().enumerate() {
        for (j, tj) in tangents.iter().enumerate() {
            w[i * m + j] = (0..n).map(|l| ti[l] * tj[l] * 2.0 / (a[l] * a[l])).sum::<f64>() / gnorm;
        }
    }
    Ok(eigenvalues(&SymMatrix::new(m, w)?)?.values().to_vec())
}

/// Tube data around the boundary: width `δ`, barrier depth `d0 ≤ δ` and
/// curvature bound `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeSpec {
    pub delta: f64,
    pub d0: f64,
    pub mu: f64,
}

impl TubeSpec {
    pub fn new(delta: f64, d0: f64, mu: f64) -> Result<Self> {
        if !(d0 > 0.0 && d0 <= delta) {
            return Err(Error::Domain(format!("need 0 < d0 <= delta, got d0 = {d0}, delta = {delta}")));
        }
        if !(mu >= 0.0) {
            return Err(Error::Domain(format!("curvature bound must be non-negative, got {mu}")));
        }
        Ok(Self { delta, d0, mu })
    }

    /// `μ` from the field and the default depth `d0 = min(δ, 1/(2μ))`.
    pub fn for_field(field: &CurvatureField, delta: f64) -> Result<Self> {
        let mu = field.mu();
        let d0 = if mu > 0.0 { delta.min(0.5 / mu) } else { delta };
        Self::new(delta, d0, mu)
    }
}

/// `σ_j(κ(y)) > 0` for every sample and `j = 1..k-1`.
pub fn strictly_km1_convex(field: &CurvatureField, k: usize) -> Result<bool> {
    if k < 2 || k > field.dim {
        return Err(Error::Domain(format!("order k = {k} must satisfy 2 <= k <= N = {}", field.dim)));
    }
    Ok(field.samples.iter().all(|s| {
        let e = elementary_symmetric(&s.kappa, k - 1);
        e[1..].iter().all(|&v| v > 0.0)
    }))
}

/// `σ_j(κ, R)` for `j = 0..=k` via `σ_j(κ, R) = R σ_{j-1}(κ) + σ_j(κ)`.
pub fn augmented_sigmas(kappa: &[f64], r: f64, k: usize) -> Vec<f64> {
    let e = elementary_symmetric(kappa, k);
    let mut out = vec![1.0; k + 1];
    let e_at = |j: usize| e.get(j).copied().unwrap_or(0.0);
    for j in 1..=k {
        out[j] = r * e_at(j - 1) + e_at(j);
    }
    out
}

fn augmented_in_gamma(field: &CurvatureField, k: usize, r: f64) -> bool {
    field.samples.iter().all(|s| augmented_sigmas(&s.kappa, r, k)[1..].iter().all(|&v| v > 0.0))
}

/// Smallest `R` (to bisection accuracy) with `(κ(y), R) ∈ Γ_k` at every sample.
///
/// Searches a doubling grid from `1e-6 (1 + μ)` and then bisects the last
/// bracket; the returned value is re-checked directly.
pub fn augment_r(field: &CurvatureField, k: usize) -> Result<f64> {
    if k == 1 {
        return Err(Error::Domain("augmentation needs k >= 2".into()));
    }
    if !strictly_km1_convex(field, k)? {
        return Err(Error::Precondition("boundary is not strictly (k-1)-convex".into()));
    }
    let mu = field.mu();
    let r_max = 1e6 * (1.0 + mu);
    let r_min = 1e-6 * (1.0 + mu);
    if augmented_in_gamma(field, k, r_min) {
        return Ok(r_min);
    }
    let mut hi = r_min;
    while !augmented_in_gamma(field, k, hi) {
        hi *= 2.0;
        if hi > r_max {
            return Err(Error::NotFound { what: "augmentation parameter R".into(), bound: r_max });
        }
    }
    let mut lo = hi / 2.0;
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if augmented_in_gamma(field, k, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if !augmented_in_gamma(field, k, hi) {
        return Err(Error::Inconsistency(format!("R = {hi} failed re-certification")));
    }
    Ok(hi)
}

/// `min σ_j(κ(y), r)` over samples and `j = 1..k`.
pub fn beta0(field: &CurvatureField, k: usize, r: f64) -> f64 {
    field
        .samples
        .iter()
        .flat_map(|s| augmented_sigmas(&s.kappa, r, k).into_iter().skip(1))
        .fold(f64::INFINITY, f64::min)
}

fn check_tube(kappa: &[f64], d: f64) -> Result<()> {
    if let Some(kap) = kappa.iter().find(|&&kap| !(1.0 - kap * d > 0.0)) {
        return Err(Error::Domain(format!("1 - kappa d <= 0 for kappa = {kap}, d = {d}")));
    }
    Ok(())
}

/// Spectrum of `D²d` in principal coordinates: `-κ_i/(1 - κ_i d)` and `0`.
pub fn hess_dist_spectrum(kappa: &[f64], d: f64) -> Result<EigenSpectrum> {
    check_tube(kappa, d)?;
    let mut v: Vec<f64> = kappa.iter().map(|&kap| -kap / (1.0 - kap * d)).collect();
    v.push(0.0);
    EigenSpectrum::new(v)
}

/// `S_j(D²(g ∘ d)) = σ_j(-κ_i g'/(1 - κ_i d), g'')`.
pub fn s_j_composition(gp: f64, gpp: f64, kappa: &[f64], d: f64, j: usize) -> Result<f64> {
    crate::error::check_order(j, kappa.len() + 1)?;
    check_tube(kappa, d)?;
    let mut v: Vec<f64> = kappa.iter().map(|&kap| -kap * gp / (1.0 - kap * d)).collect();
    v.push(gpp);
    Ok(sigma_of(&v, j))
}

/// One `(sample, d)` evaluation of a boundary barrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierNode {
    pub sample: usize,
    pub d: f64,
    /// `min_{j ≤ k} S_j` of the barrier Hessian.
    pub min_s_j: f64,
    pub s_k: f64,
    /// `S_k` minus the required right-hand side.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierReport {
    pub pass: bool,
    pub k_convex: bool,
    pub min_margin: f64,
    pub failures: usize,
    pub nodes: Vec<BarrierNode>,
}

impl BarrierReport {
    fn from_nodes(nodes: Vec<BarrierNode>) -> Self {
        let k_convex = nodes.iter().all(|n| n.min_s_j > 0.0);
        let failures = nodes.iter().filter(|n| !n.pass).count();
        let min_margin = nodes.iter().map(|n| n.margin).fold(f64::INFINITY, f64::min);
        Self { pass: failures == 0, k_convex, min_margin, failures, nodes }
    }
}

fn tube_distances(d0: f64) -> impl Iterator<Item = f64> {
    (1..=TUBE_NODES).map(move |i| d0 * i as f64 / (TUBE_NODES + 1) as f64)
}

fn check_barrier_inputs(field: &CurvatureField, k: usize, t: f64, d0: f64) -> Result<()> {
    crate::error::check_order(k, field.dim)?;
    if k >= 2 && !strictly_km1_convex(field, k)? {
        return Err(Error::Precondition("boundary is not strictly (k-1)-convex".into()));
    }
    if !(t > 0.0) || !(d0 > 0.0) {
        return Err(Error::Domain(format!("need t > 0 and d0 > 0, got t = {t}, d0 = {d0}")));
    }
    Ok(())
}

/// Checks `φ = e^{-td} - 1` on the tube: `S_j(D²φ) > 0` for `j ≤ k` and
/// `S_k(D²φ) - λ|φ|^k > 0` at every sample and every sampled `d ∈ (0, d0)`.
pub fn verify_exp_boundary_barrier(field: &CurvatureField, k: usize, lambda: f64, t: f64, d0: f64) -> Result<BarrierReport> {
    check_barrier_inputs(field, k, t, d0)?;
    let mut nodes = Vec::new();
    for (si, s) in field.samples.iter().enumerate() {
        for d in tube_distances(d0) {
            let e = (-t * d).exp();
            let (gp, gpp) = (-t * e, t * t * e);
            let mut min_s_j = f64::INFINITY;
            let mut s_k = 0.0;
            for j in 1..=k {
                let v = s_j_composition(gp, gpp, &s.kappa, d, j)?;
                min_s_j = min_s_j.min(v);
                s_k = v;
            }
            let margin = s_k - lambda * (1.0 - e).powi(k as i32);
            nodes.push(BarrierNode { sample: si, d, min_s_j, s_k, margin, pass: min_s_j > 0.0 && margin > 0.0 });
        }
    }
    Ok(BarrierReport::from_nodes(nodes))
}

/// Amplitude chosen for `v = -M log(1 + t d)` and its verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogBarrier {
    pub big_m: f64,
    /// Boundary growth constant `C3 = M t`.
    pub c3: f64,
    pub beta0: f64,
    pub report: BarrierReport,
}

/// Picks `M` for `v = -M log(1 + t d)` so that `M ≥ usup / log(1 + t d0)` and
/// `(Mt/(1 + t d0))^k β0/2 > fsup`, then verifies `S_j(D²v) > 0` for `j ≤ k`
/// and `S_k(D²v) > fsup` on the tube.
///
/// `β0` is the minimum of `σ_j(κ, t/(1 + t d0))` over samples and `j ≤ k`,
/// which requires `t/(1 + t d0)` to reach the augmentation parameter.
pub fn verify_log_boundary_barrier(
    field: &CurvatureField,
    k: usize,
    fsup: f64,
    usup: f64,
    t: f64,
    d0: f64,
) -> Result<LogBarrier> {
    check_barrier_inputs(field, k, t, d0)?;
    if !(fsup >= 0.0) || !(usup >= 0.0) {
        return Err(Error::Domain("fsup and usup must be non-negative".into()));
    }
    let r_eff = t / (1.0 + t * d0);
    if k >= 2 {
        let r_star = augment_r(field, k)?;
        if r_eff < r_star {
            return Err(Error::NotFound {
                what: format!("t/(1 + t d0) = {r_eff} below the augmentation parameter {r_star}"),
                bound: r_star,
            });
        }
    }
    let b0 = beta0(field, k, r_eff);
    if !(b0 > 0.0) {
        return Err(Error::NotFound { what: format!("positive beta0 at R = {r_eff}"), bound: r_eff });
    }
    let from_u = usup / (1.0 + t * d0).ln();
    let from_f = (fsup / (0.5 * b0)).powf(1.0 / k as f64) / r_eff * (1.0 + 1e-6);
    let mut big_m = from_u.max(from_f);
    if big_m == 0.0 {
        big_m = 1.0;
    }

    let mut nodes = Vec::new();
    for (si, s) in field.samples.iter().enumerate() {
        for d in tube_distances(d0) {
            let q = 1.0 + t * d;
            let (gp, gpp) = (-big_m * t / q, big_m * t * t / (q * q));
            let mut min_s_j = f64::INFINITY;
            let mut s_k = 0.0;
            for j in 1..=k {
                let v = s_j_composition(gp, gpp, &s.kappa, d, j)?;
                min_s_j = min_s_j.min(v);
                s_k = v;
            }
            let margin = s_k - fsup;
            nodes.push(BarrierNode { sample: si, d, min_s_j, s_k, margin, pass: min_s_j > 0.0 && margin > 0.0 });
        }
    }
    Ok(LogBarrier { big_m, c3: big_m * t, beta0: b0, report: BarrierReport::from_nodes(nodes) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_is_convex_for_every_order() {
        let f = CurvatureField::sphere(4, 2.0).unwrap();
        for k in 2..=4 {
            assert!(strictly_km1_convex(&f, k).unwrap());
        }
        assert!(strictly_km1_convex(&f, 1).is_err());
    }

    #[test]
    fn saddle_fails() {
        let f = CurvatureField::uniform(vec![1.0, -2.0]).unwrap();
        assert!(!strictly_km1_convex(&f, 3).unwrap());
        assert!(matches!(augment_r(&f, 3), Err(Error::Precondition(_))));
    }

    #[test]
    fn augment_matches_linear_identity() {
        let kappa = vec![1.0, 1.0, -0.1];
        let f = CurvatureField::uniform(kappa.clone()).unwrap();
        let e = elementary_symmetric(&kappa, 3);
        let want = -e[3] / e[2];
        let got = augment_r(&f, 3).unwrap();
        assert!(got > want && (got - want) < 1e-10 * want, "{got} vs {want}");
    }

    #[test]
    fn sphere_augments_to_grid_minimum() {
        let f = CurvatureField::sphere(3, 1.0).unwrap();
        assert_eq!(augment_r(&f, 3).unwrap(), 2e-6);
    }

    #[test]
    fn distance_hessian() {
        let s = hess_dist_spectrum(&[0.0, 0.0], 0.3).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
        let s = hess_dist_spectrum(&[0.5, 0.5], 0.4).unwrap();
        assert!((s.values()[0] + 1.0 / (2.0 - 0.4)).abs() < 1e-15);
        assert!(hess_dist_spectrum(&[2.0], 0.5).is_err());
    }

    #[test]
    fn composition_closed_forms() {
        let kappa = [0.7, 1.3];
        let (t, d): (f64, f64) = (2.5, 0.2);
        let e = (-t * d).exp();
        let scaled: Vec<f64> = kappa.iter().map(|k| k / (1.0 - k * d)).chain([t]).collect();
        for j in 1..=3 {
            let got = s_j_composition(-t * e, t * t * e, &kappa, d, j).unwrap();
            let want = t.powi(j as i32) * (-(j as f64) * t * d).exp() * sigma_of(&scaled, j);
            assert!((got - want).abs() < 1e-12 * want.abs());
        }
        assert_eq!(s_j_composition(1.0, 0.0, &[0.0, 0.0], 0.1, 2).unwrap(), 0.0);
    }

    #[test]
    fn exp_barrier_on_unit_sphere() {
        let f = CurvatureField::sphere(3, 1.0).unwrap();
        let rep = verify_exp_boundary_barrier(&f, 2, 1.0, 2.0, 0.5).unwrap();
        assert!(rep.pass);
        let margins: Vec<f64> = rep.nodes.iter().filter(|n| n.sample == 0).map(|n| n.margin).collect();
        assert!(margins.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn exp_barrier_fails_below_augmentation() {
        let f = CurvatureField::uniform(vec![1.0, 1.0, -0.2]).unwrap();
        let r = augment_r(&f, 3).unwrap();
        let rep = verify_exp_boundary_barrier(&f, 3, 0.0, 0.5 * r, 0.01).unwrap();
        assert!(!rep.k_convex && !rep.pass);
        let rep = verify_exp_boundary_barrier(&f, 3, 0.0, 2.0 * r, 0.01).unwrap();
        assert!(rep.pass);
    }

    #[test]
    fn log_barrier_on_unit_sphere() {
        let f = CurvatureField::sphere(3, 1.0).unwrap();
        let lb = verify_log_boundary_barrier(&f, 2, 1.0, 0.5, 4.0, 0.25).unwrap();
        assert!(lb.report.pass && lb.big_m.is_finite());
        assert!(lb.big_m >= 0.5 / 2f64.ln());
        let triv = verify_log_boundary_barrier(&f, 2, 0.0, 0.0, 4.0, 0.25).unwrap();
        assert_eq!(triv.big_m, 1.0);
        assert!(triv.report.pass);
    }

    #[test]
    fn ellipse_curvature_closed_form() {
        let (a, b) = (2.0, 1.0);
        let f = CurvatureField::ellipsoid(&[a, b], 16).unwrap();
        for s in f.samples() {
            let (x, y) = (s.point[0], s.point[1]);
            // κ = a b / (a² sin²u + b² cos²u)^{3/2}
            let u = (y / b).atan2(x / a);
            let w = (a * a * u.sin().powi(2) + b * b * u.cos().powi(2)).sqrt();
            assert!((s.kappa[0] - a * b / w.powi(3)).abs() < 1e-12);
        }
    }

    #[test]
    fn field_json_round_trip() {
        let f = CurvatureField::ellipsoid(&[2.0, 1.0, 1.0], 10).unwrap();
        let back = CurvatureField::from_json_str(&f.to_json_string()).unwrap();
        assert_eq!(back, f);
        assert!(CurvatureField::from_json_str("[]").is_err());
    }
}
