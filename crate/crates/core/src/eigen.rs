//! Principal eigenvalue `λ₁⁻` of `S_k(D²ψ) + λ ψ|ψ|^{k-1} = 0` on a ball.
//!
//! For fixed `λ` the iteration `S_k(D²u_n) = 1 + λ|u_{n-1}|^k`, `u_0 = 0`,
//! produces a nonincreasing sequence that stays bounded exactly when
//! `λ < λ₁⁻`. Bisection on that predicate brackets `λ₁⁻`; the normalized
//! fixed point of the last convergent probe approximates the eigenfunction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cones::{classical_supersolution_at, AdmissibleJet, SymMatrix};
use crate::dirichlet::{holder_seminorm, RadialSolver, RawSolution, SolverConfig};
use crate::error::{check_order, Error, Result};
use crate::radial::{quartic_test_profile, RadialProfile};
use crate::symfun::binomial;

/// `C(N,k) R^{-2k}`, valid whenever the domain lies in `B_R`.
pub fn lower_bound(n: usize, k: usize, radius: f64) -> f64 {
    binomial(n, k) * radius.powi(-2 * k as i32)
}

/// `4^k C(N,k) R^{-2k}` for domains containing `B_R`.
pub fn upper_bound(n: usize, k: usize, radius: f64) -> f64 {
    4f64.powi(k as i32) * lower_bound(n, k, radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BisectTol {
    Absolute(f64),
    /// Fraction of the initial bracket `upper_bound - lower_bound`.
    Relative(f64),
}

impl BisectTol {
    fn resolve(self, width: f64) -> f64 {
        match self {
            Self::Absolute(t) => t,
            Self::Relative(t) => t * width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IterationConfig {
    /// Divergence threshold as a multiple of the sup norm of the `f ≡ 1` solution.
    pub sup_cap: f64,
    pub n_max: usize,
    /// Relative sup-norm tolerance on the extrapolated distance to the fixed point.
    pub fixed_point_tol: f64,
    pub bisect_tol: BisectTol,
    /// Probes evaluated (in parallel) per bisection round.
    pub probes_per_round: usize,
    /// Iterations before the increment-growth test is armed.
    pub warmup: usize,
    /// Consecutive increment increases that confirm slow divergence.
    pub growth_window: usize,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            sup_cap: 1e6,
            n_max: 100_000,
            fixed_point_tol: 1e-10,
            bisect_tol: BisectTol::Relative(1e-3),
            probes_per_round: 1,
            warmup: 20,
            growth_window: 10,
        }
    }
}

impl IterationConfig {
    pub fn validate(&self) -> Result<()> {
        let tol = match self.bisect_tol {
            BisectTol::Absolute(t) | BisectTol::Relative(t) => t,
        };
        if !(self.sup_cap > 1.0) || self.n_max == 0 || !(self.fixed_point_tol > 0.0) || !(tol > 0.0) {
            return Err(Error::Domain("iteration settings must be positive (sup_cap > 1)".into()));
        }
        if self.probes_per_round == 0 || self.growth_window == 0 {
            return Err(Error::Domain("probes_per_round and growth_window must be at least 1".into()));
        }
        Ok(())
    }
}

/// Increment ratios above this count as fast growth, left to the sup cap.
const SLOW_GROWTH_RATIO: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    FixedPoint,
    SupCap,
    IncrementGrowth,
    /// `n_max` reached with increments still shrinking.
    PlateauAtLimit,
    /// `n_max` reached with increments growing.
    GrowthAtLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub lambda: f64,
    pub iterations: usize,
    pub sup_norms: Vec<f64>,
    pub increments: Vec<f64>,
    pub reason: StopReason,
}

#[derive(Debug, Clone)]
pub struct FixedPoint {
    /// Last iterate with derivatives; not normalized.
    pub profile: RadialProfile,
    pub trace: IterationTrace,
}

#[derive(Debug, Clone)]
pub enum IterationOutcome {
    Converged(FixedPoint),
    /// Still contracting when `n_max` ran out.
    ConvergedSlow(FixedPoint),
    Diverged(IterationTrace),
}

impl IterationOutcome {
    pub fn trace(&self) -> &IterationTrace {
        match self {
            Self::Converged(p) | Self::ConvergedSlow(p) => &p.trace,
            Self::Diverged(t) => t,
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self, Self::Converged(_))
    }

    fn label(&self) -> &'static str {
        match self {
            Self::Converged(_) => "converged",
            Self::ConvergedSlow(_) => "converged_slow",
            Self::Diverged(_) => "diverged",
        }
    }
}

/// Step-by-step access to `u_n` for a fixed `λ`.
pub struct FixedLambdaIteration<'a> {
    solver: &'a RadialSolver,
    lambda: f64,
    f: Vec<f64>,
    raw: RawSolution,
    n: usize,
}

impl<'a> FixedLambdaIteration<'a> {
    pub fn new(solver: &'a RadialSolver, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("spectral parameter must be finite and >= 0, got {lambda}")));
        }
        let m = solver.grid().len();
        let raw = RawSolution { h: vec![0.0; m], hp: vec![0.0; m] };
        Ok(Self { solver, lambda, f: vec![1.0; m], raw, n: 0 })
    }

    /// Current iterate `u_n` (`u_0 = 0`).
    pub fn current(&self) -> &[f64] {
        &self.raw.h
    }

    pub fn index(&self) -> usize {
        self.n
    }

    /// Advances to `u_{n+1}` and returns it.
    pub fn step(&mut self) -> &[f64] {
        let k = self.solver.order() as i32;
        for (fi, &u) in self.f.iter_mut().zip(&self.raw.h) {
            *fi = 1.0 + self.lambda * u.abs().powi(k);
        }
        self.raw = self.solver.solve_values(&self.f, None, 0.0);
        self.n += 1;
        &self.raw.h
    }

    /// The current iterate as a profile, with the source that produced it.
    pub fn profile(&self) -> Result<RadialProfile> {
        let (mut p, _) = self.solver.assemble(self.raw.clone(), &self.f, false)?;
        p.k_convex = true;
        Ok(p)
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Runs the fixed-`λ` iteration on a prepared solver.
pub fn iterate_with_solver(solver: &RadialSolver, lambda: f64, cfg: &IterationConfig) -> Result<IterationOutcome> {
    cfg.validate()?;
    let mut it = FixedLambdaIteration::new(solver, lambda)?;
    let mut prev = it.step().to_vec();
    let first = sup(&prev);
    let mut sup_norms = vec![first];
    let mut increments = vec![first];
    let finish = |it: &FixedLambdaIteration, sup_norms: Vec<f64>, increments: Vec<f64>, reason| -> Result<FixedPoint> {
        let trace = IterationTrace { lambda, iterations: it.index(), sup_norms, increments, reason };
        Ok(FixedPoint { profile: it.profile()?, trace })
    };
    if lambda == 0.0 || first == 0.0 {
        return Ok(IterationOutcome::Converged(finish(&it, sup_norms, increments, StopReason::FixedPoint)?));
    }
    let cap = cfg.sup_cap * first;
    let mut streak = 0usize;

    while it.index() < cfg.n_max {
        let u = it.step();
        let mut d: f64 = 0.0;
        for (i, (&new, &old)) in u.iter().zip(&prev).enumerate() {
            if new > old + 1e-10 * (1.0 + old.abs()) || new > 1e-12 * (1.0 + old.abs()) {
                return Err(Error::Inconsistency(format!(
                    "iterate {} rose at node {i}: {old:e} -> {new:e} (lambda = {lambda})",
                    it.index()
                )));
            }
            d = d.max(old - new);
        }
        let norm = sup(u);
        prev.copy_from_slice(u);
        let d_prev = *increments.last().expect("non-empty");
        sup_norms.push(norm);
        increments.push(d);

        if norm > cap {
            return Ok(IterationOutcome::Diverged(IterationTrace {
                lambda,
                iterations: it.index(),
                sup_norms,
                increments,
                reason: StopReason::SupCap,
            }));
        }
        let q = if d_prev > 0.0 { d / d_prev } else { 0.0 };
        if q < 1.0 && d * (q / (1.0 - q)).max(1.0) <= cfg.fixed_point_tol * norm.max(1.0) {
            return Ok(IterationOutcome::Converged(finish(&it, sup_norms, increments, StopReason::FixedPoint)?));
        }
        if it.index() > cfg.warmup && d > d_prev {
            streak += 1;
        } else {
            streak = 0;
        }
        if streak >= cfg.growth_window && q < SLOW_GROWTH_RATIO {
            return Ok(IterationOutcome::Diverged(IterationTrace {
                lambda,
                iterations: it.index(),
                sup_norms,
                increments,
                reason: StopReason::IncrementGrowth,
            }));
        }
    }
    let n = increments.len();
    if n >= 2 && increments[n - 1] > increments[n - 2] {
        Ok(IterationOutcome::Diverged(IterationTrace {
            lambda,
            iterations: it.index(),
            sup_norms,
            increments,
            reason: StopReason::GrowthAtLimit,
        }))
    } else {
        Ok(IterationOutcome::ConvergedSlow(finish(&it, sup_norms, increments, StopReason::PlateauAtLimit)?))
    }
}

pub fn iterate_fixed_lambda(
    lambda: f64,
    radius: f64,
    n: usize,
    k: usize,
    cfg: &IterationConfig,
    scfg: &SolverConfig,
) -> Result<IterationOutcome> {
    check_order(k, n)?;
    let solver = RadialSolver::ball(n, k, radius, scfg)?;
    iterate_with_solver(&solver, lambda, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub lambda: f64,
    pub outcome: String,
    pub reason: StopReason,
    pub iterations: usize,
    pub final_sup_norm: f64,
}

impl ProbeRecord {
    fn from_outcome(o: &IterationOutcome) -> Self {
        let t = o.trace();
        Self {
            lambda: t.lambda,
            outcome: o.label().to_string(),
            reason: t.reason,
            iterations: t.iterations,
            final_sup_norm: t.sup_norms.last().copied().unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    #[serde(rename = "N")]
    pub dim: usize,
    pub k: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub lambda_best: f64,
    pub bounds: Bounds,
    pub rayleigh: f64,
    pub residual_max: f64,
    /// Absolute bracket tolerance in force at the end (loosened on a slow probe).
    pub bisect_tol: f64,
    pub tolerance_met: bool,
    /// Seminorm at `α = 2 - N/k`, reported when `k > N/2`.
    pub holder: Option<f64>,
    pub probes: Vec<ProbeRecord>,
    pub profile_ref: Option<String>,
    #[serde(skip_serializing, default)]
    pub eigenfunction: Option<RadialProfile>,
}

impl SpectralEstimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serializes")
    }
}

/// Bisects `λ` on `[lower_bound, upper_bound]` using convergence of the
/// fixed-`λ` iteration as the predicate.
pub fn estimate_lambda1(radius: f64, n: usize, k: usize, cfg: &IterationConfig, scfg: &SolverConfig) -> Result<SpectralEstimate> {
    check_order(k, n)?;
    cfg.validate()?;
    let solver = RadialSolver::ball(n, k, radius, scfg)?;
    let (lower, upper) = (lower_bound(n, k, radius), upper_bound(n, k, radius));
    let mut tol = cfg.bisect_tol.resolve(upper - lower);
    let mut probes = Vec::new();

    let at_lower = iterate_with_solver(&solver, lower, cfg)?;
    probes.push(ProbeRecord::from_outcome(&at_lower));
    let mut best_fixed = match at_lower {
        IterationOutcome::Converged(p) => p,
        _ => {
            return Err(Error::Inconsistency(format!(
                "iteration fails to converge at the lower bound {lower}: {probes:?}"
            )))
        }
    };
    let at_upper = iterate_with_solver(&solver, upper, cfg)?;
    probes.push(ProbeRecord::from_outcome(&at_upper));
    if !matches!(at_upper, IterationOutcome::Diverged(_)) {
        return Err(Error::Inconsistency(format!("iteration does not diverge at the upper bound {upper}: {probes:?}")));
    }

    let (mut lo, mut hi) = (lower, upper);
    let mut slow_best = None;
    let p = cfg.probes_per_round;
    while hi - lo > tol {
        let lambdas: Vec<f64> = (1..=p).map(|i| lo + (hi - lo) * i as f64 / (p + 1) as f64).collect();
        let outcomes = lambdas
            .par_iter()
            .map(|&l| iterate_with_solver(&solver, l, cfg))
            .collect::<Result<Vec<_>>>()?;
        probes.extend(outcomes.iter().map(ProbeRecord::from_outcome));

        let mut seen_divergence = false;
        let (mut new_lo, mut new_hi) = (lo, hi);
        for (l, o) in lambdas.iter().zip(outcomes) {
            match o {
                IterationOutcome::Converged(fp) => {
                    if seen_divergence {
                        return Err(Error::Inconsistency(format!(
                            "convergence at {l} above a divergent probe: {probes:?}"
                        )));
                    }
                    new_lo = *l;
                    best_fixed = fp;
                }
                IterationOutcome::ConvergedSlow(_) => {
                    if !seen_divergence && slow_best.is_none() {
                        slow_best = Some(*l);
                    }
                }
                IterationOutcome::Diverged(_) => {
                    if !seen_divergence {
                        new_hi = *l;
                    }
                    seen_divergence = true;
                }
            }
        }
        if slow_best.is_some() {
            tol *= 2.0;
            break;
        }
        lo = new_lo;
        hi = new_hi;
    }

    let lambda_best = slow_best.unwrap_or(0.5 * (lo + hi));
    let norm = best_fixed.profile.sup_norm();
    let psi = best_fixed.profile.scaled(1.0 / norm);
    let residual_max = eigen_residual(&psi, lambda_best)?;
    let rayleigh = rayleigh_quotient(&psi)?;
    let holder = if 2 * k > n { Some(holder_seminorm(&psi, 2.0 - n as f64 / k as f64)?) } else { None };
    Ok(SpectralEstimate {
        dim: n,
        k,
        radius,
        lambda_lo: lo,
        lambda_hi: hi,
        lambda_best,
        bounds: Bounds { lower, upper },
        rayleigh,
        residual_max,
        bisect_tol: tol,
        tolerance_met: hi - lo <= tol,
        holder,
        probes,
        profile_ref: None,
        eigenfunction: Some(psi),
    })
}

/// `max_i |S_k(D²ψ)(r_i) - λ|ψ(r_i)|^k|`.
pub fn eigen_residual(psi: &RadialProfile, lambda: f64) -> Result<f64> {
    let k = psi.order as i32;
    let mut worst: f64 = 0.0;
    for i in 0..psi.len() {
        worst = worst.max((psi.s_k_at(i)? - lambda * psi.h[i].abs().powi(k)).abs());
    }
    Ok(worst)
}

/// Surface measure `ω_{N-1}` of the unit sphere in `ℝ^N`.
pub fn sphere_measure(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (n - 2) as f64 * sphere_measure(n - 2),
    }
}

/// `∫_{B_R} g(|x|) dx` for node values `g`, by the trapezoid rule in `r`.
pub fn radial_integral(profile: &RadialProfile, g: &[f64]) -> f64 {
    let n = profile.dim as i32;
    let r = &profile.grid;
    let w: Vec<f64> = r.iter().zip(g).map(|(&ri, &gi)| gi * ri.powi(n - 1)).collect();
    let s: f64 = r.windows(2).zip(w.windows(2)).map(|(rr, ww)| 0.5 * (rr[1] - rr[0]) * (ww[0] + ww[1])).sum();
    sphere_measure(profile.dim) * s
}

/// `-∫ u S_k(D²u) / ∫ |u|^{k+1}` over the ball.
pub fn rayleigh_quotient(profile: &RadialProfile) -> Result<f64> {
    if profile.sup_norm() == 0.0 {
        return Err(Error::Domain("Rayleigh quotient of the zero profile".into()));
    }
    let k = profile.order as i32;
    let energy: Vec<f64> = (0..profile.len()).map(|i| Ok(-profile.h[i] * profile.s_k_at(i)?)).collect::<Result<_>>()?;
    let mass: Vec<f64> = profile.h.iter().map(|u| u.abs().powi(k + 1)).collect();
    Ok(radial_integral(profile, &energy) / radial_integral(profile, &mass))
}

/// Result of checking `S_k(D²u) + λ u|u|^{k-1} ≤ 0` (or `D²u ∉ Σ_k`) at
/// every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinPrincipleReport {
    pub lambda: f64,
    pub is_supersolution: bool,
    pub failing_nodes: Vec<usize>,
    pub interior_min: f64,
    pub argmin_r: f64,
    pub boundary_value: f64,
    /// A verified supersolution with nonnegative boundary value and a
    /// negative interior minimum: the minimum principle fails at `λ`, so
    /// `λ₁⁻ ≤ λ`.
    pub certifies: bool,
}

impl MinPrincipleReport {
    /// True when the certificate contradicts `λ < lambda_best`, i.e. a
    /// minimum-principle violation below the estimated eigenvalue.
    pub fn contradicts(&self, lambda_best: f64) -> bool {
        self.certifies && self.lambda < lambda_best
    }
}

pub fn minimum_principle_probe(profile: &RadialProfile, lambda: f64) -> Result<MinPrincipleReport> {
    let k = profile.order;
    let mut failing_nodes = Vec::new();
    for i in 0..profile.len() {
        let spectrum = profile.spectrum_at(i)?;
        let jet = AdmissibleJet::from_hessian(profile.h[i], SymMatrix::diagonal(spectrum.values()));
        if !classical_supersolution_at(&jet, lambda, k, 0.0)? {
            failing_nodes.push(i);
        }
    }
    let last = profile.len() - 1;
    let (interior_min, at) = profile.h[..last]
        .iter()
        .enumerate()
        .fold((f64::INFINITY, 0), |(m, a), (i, &v)| if v < m { (v, i) } else { (m, a) });
    let boundary_value = profile.h[last];
    let is_supersolution = failing_nodes.is_empty();
    Ok(MinPrincipleReport {
        lambda,
        is_supersolution,
        failing_nodes,
        interior_min,
        argmin_r: profile.grid[at],
        boundary_value,
        certifies: is_supersolution && boundary_value >= 0.0 && interior_min < 0.0,
    })
}

/// Smallest `C` for which the quartic `-(R² - r²)²/4` passes the
/// supersolution test `S_k(D²u) + C u|u|^{k-1} ≤ 0` at every admissible node.
pub fn quartic_certifying_constant(radius: f64, n: usize, k: usize, grid_size: usize) -> Result<f64> {
    let p = quartic_test_profile(radius, n, k, grid_size)?;
    let mut c: f64 = 0.0;
    for i in 0..p.len() - 1 {
        let spectrum = p.spectrum_at(i)?;
        let e = crate::symfun::elementary_symmetric(spectrum.values(), k);
        if e[1..].iter().all(|&s| s >= 0.0) {
            c = c.max(e[k] / p.h[i].abs().powi(k as i32));
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub r1: f64,
    pub r2: f64,
    pub lambda_r1: f64,
    pub lambda_r2: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// `λ̂(B_{R2}) ≤ λ̂(B_{R1}) + 2 tol` for `R1 ≤ R2`.
pub fn domain_monotonicity_check(
    n: usize,
    k: usize,
    r1: f64,
    r2: f64,
    cfg: &IterationConfig,
    scfg: &SolverConfig,
) -> Result<MonotonicityReport> {
    if !(r1 > 0.0 && r1 <= r2) {
        return Err(Error::Precondition(format!("need 0 < R1 <= R2, got {r1}, {r2}")));
    }
    let e1 = estimate_lambda1(r1, n, k, cfg, scfg)?;
    let e2 = if r2 == r1 { e1.clone() } else { estimate_lambda1(r2, n, k, cfg, scfg)? };
    let tolerance = e1.bisect_tol.max(e2.bisect_tol);
    Ok(MonotonicityReport {
        r1,
        r2,
        lambda_r1: e1.lambda_best,
        lambda_r2: e2.lambda_best,
        tolerance,
        holds: e2.lambda_best <= e1.lambda_best + 2.0 * tolerance,
    })
}
