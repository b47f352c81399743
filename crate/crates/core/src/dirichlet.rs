//! Radial Dirichlet problem `S_k(D²u) = f(|x|)` in `B_R`, `u = 0` on `∂B_R`.
//!
//! The k-convex radial solution satisfies the first integral
//!
//! `r^{N-k} h'(r)^k = K ∫₀^r s^{N-1} f(s) ds`, `K = k / C(N-1,k-1)`,
//!
//! so `h' = (K r^{k-N} I(r))^{1/k}` and `h(r) = -∫_r^R h'`. The source is
//! interpolated on each cell and integrated against `s^{N-1}` exactly.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_order, Error, Result};
use crate::radial::{derivative_of_radial_slope, RadialProfile};
use crate::symfun::binomial;

/// Right-hand side `f(r) ≥ 0`.
#[derive(Clone)]
pub enum SourceTerm {
    Constant(f64),
    /// `f(r) = Σ c_i r^i`.
    Poly(Vec<f64>),
    /// Samples `(r_i, f_i)`, interpolated linearly and held constant outside.
    Sampled { r: Vec<f64>, f: Vec<f64> },
    Closure(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for SourceTerm {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(fm, "Constant({c})"),
            Self::Poly(c) => write!(fm, "Poly({c:?})"),
            Self::Sampled { r, .. } => write!(fm, "Sampled({} points)", r.len()),
            Self::Closure(_) => write!(fm, "Closure"),
        }
    }
}

impl SourceTerm {
    pub fn closure(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Closure(Arc::new(f))
    }

    pub fn sampled(r: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if r.is_empty() || r.len() != f.len() {
            return Err(Error::Domain("sampled source needs equally many radii and values".into()));
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("sample radii must be strictly increasing".into()));
        }
        if r.iter().chain(&f).any(|v| !v.is_finite()) {
            return Err(Error::Domain("sampled source has non-finite entries".into()));
        }
        Ok(Self::Sampled { r, f })
    }

    /// Parses `const:<c>`, `poly:<c0,c1,...>` or `file:<csv>` (columns `r,f`,
    /// optional header).
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("source `{spec}` lacks a `kind:` prefix")))?;
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad number `{s}`: {e}")));
        match kind {
            "const" => Ok(Self::Constant(num(rest)?)),
            "poly" => Ok(Self::Poly(rest.split(',').map(num).collect::<Result<_>>()?)),
            "file" => Self::load_csv(rest),
            other => Err(Error::Parse(format!("unknown source kind `{other}`"))),
        }
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let (mut r, mut f) = (Vec::new(), Vec::new());
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() < 2 {
                return Err(Error::Parse(format!("line {}: expected `r,f`", lineno + 1)));
            }
            match (cols[0].parse::<f64>(), cols[1].parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    r.push(a);
                    f.push(b);
                }
                _ if lineno == 0 => continue,
                _ => return Err(Error::Parse(format!("line {}: malformed numbers", lineno + 1))),
            }
        }
        Self::sampled(r, f)
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Poly(c) => c.iter().rev().fold(0.0, |acc, &ci| acc * r + ci),
            Self::Sampled { r: xs, f } => {
                let j = xs.partition_point(|&x| x <= r);
                if j == 0 {
                    f[0]
                } else if j == xs.len() {
                    f[xs.len() - 1]
                } else {
                    let t = (r - xs[j - 1]) / (xs[j] - xs[j - 1]);
                    f[j - 1] + t * (f[j] - f[j - 1])
                }
            }
            Self::Closure(g) => g(r),
        }
    }

    /// True for closed-form sources, whose `h''` is taken from the first integral.
    pub fn is_evaluable(&self) -> bool {
        !matches!(self, Self::Sampled { .. })
    }

    fn check_samples(&self, values: &[f64]) -> Result<()> {
        let all: Box<dyn Iterator<Item = &f64>> = match self {
            Self::Sampled { f, .. } => Box::new(f.iter().chain(values)),
            _ => Box::new(values.iter()),
        };
        for &v in all {
            if !v.is_finite() {
                return Err(Error::Domain("source evaluates to a non-finite value".into()));
            }
            if v < 0.0 {
                return Err(Error::Precondition(format!("source must be non-negative, found {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    Trapezoid,
    Simpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Uniform,
    /// Cell widths shrink geometrically toward `r = R`, consecutive ratio
    /// `0.9^{64/M}`.
    Graded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Number of cells `M ≥ 64`.
    pub grid_size: usize,
    pub quadrature: Quadrature,
    pub tol_residual: f64,
    pub refine_max: usize,
    pub grid: GridKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { grid_size: 512, quadrature: Quadrature::Trapezoid, tol_residual: 1e-3, refine_max: 3, grid: GridKind::Uniform }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 64 {
            return Err(Error::Domain(format!("grid_size must be >= 64, got {}", self.grid_size)));
        }
        if !(self.tol_residual > 0.0) {
            return Err(Error::Domain("tol_residual must be positive".into()));
        }
        Ok(())
    }
}

/// Nodes on `[a, b]` with `cells` cells.
pub fn build_grid(a: f64, b: f64, cells: usize, kind: GridKind) -> Vec<f64> {
    match kind {
        GridKind::Uniform => crate::radial::uniform_grid(a, b, cells),
        GridKind::Graded => {
            let q = 0.9f64.powf(64.0 / cells as f64);
            let w0 = (b - a) * (1.0 - q) / (1.0 - q.powi(cells as i32));
            let mut g = Vec::with_capacity(cells + 1);
            let (mut x, mut w) = (a, w0);
            for _ in 0..cells {
                g.push(x);
                x += w;
                w *= q;
            }
            g.push(b);
            g
        }
    }
}

/// `∫_0^T (r + τ)^{N-1} τ^p dτ / Δ^p`, expanded so every term is non-negative.
fn moment(r: f64, t: f64, delta: f64, n: usize, p: i32) -> f64 {
    (0..n)
        .map(|m| binomial(n - 1, m) * r.powi((n - 1 - m) as i32) * t.powi(m as i32 + p + 1) / (m as i32 + p + 1) as f64)
        .sum::<f64>()
        / delta.powi(p)
}

#[derive(Debug, Clone)]
struct Cell {
    /// Weights of `f_i, f_{i+1}` for the linear interpolant.
    lin: [f64; 2],
    /// Weights of `f_i, f_mid, f_{i+1}` over the full and the half cell.
    quad_full: [f64; 3],
    quad_half: [f64; 3],
    /// Linear-interpolant weights over the half cell.
    lin_half: [f64; 2],
}

impl Cell {
    fn new(r: f64, delta: f64, n: usize) -> Self {
        let lin_lo = (0..n)
            .map(|m| {
                binomial(n - 1, m) * r.powi((n - 1 - m) as i32) * delta.powi(m as i32 + 1) / ((m + 1) * (m + 2)) as f64
            })
            .sum();
        let lin_hi = moment(r, delta, delta, n, 1);
        let quad = |t: f64| {
            let (m0, m1, m2) = (moment(r, t, delta, n, 0), moment(r, t, delta, n, 1), moment(r, t, delta, n, 2));
            [m0 - 3.0 * m1 + 2.0 * m2, 4.0 * m1 - 4.0 * m2, -m1 + 2.0 * m2]
        };
        let h = 0.5 * delta;
        let (m0h, m1h) = (moment(r, h, delta, n, 0), moment(r, h, delta, n, 1));
        Self { lin: [lin_lo, lin_hi], quad_full: quad(delta), quad_half: quad(h), lin_half: [m0h - m1h, m1h] }
    }
}

/// Slopes and values of one solve before the profile is assembled.
#[derive(Debug, Clone)]
pub struct RawSolution {
    pub h: Vec<f64>,
    pub hp: Vec<f64>,
}

/// Radial solver on a fixed grid with precomputed cell weights; reused across
/// the many solves of the eigenvalue iteration.
#[derive(Debug, Clone)]
pub struct RadialSolver {
    dim: usize,
    order: usize,
    grid: Vec<f64>,
    mids: Vec<f64>,
    quadrature: Quadrature,
    cells: Vec<Cell>,
    kfac: f64,
}

impl RadialSolver {
    /// Solver on an explicit grid starting at the origin (ball) or at an
    /// inner radius `grid[0] > 0` (annulus).
    pub fn new(dim: usize, order: usize, grid: Vec<f64>, quadrature: Quadrature) -> Result<Self> {
        check_order(order, dim)?;
        if grid.len() < 3 || grid[0] < 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("grid must be non-negative, increasing, with at least 3 nodes".into()));
        }
        let cells = grid.windows(2).map(|w| Cell::new(w[0], w[1] - w[0], dim)).collect();
        let mids = grid.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let kfac = order as f64 / binomial(dim - 1, order - 1);
        Ok(Self { dim, order, grid, mids, quadrature, cells, kfac })
    }

    pub fn ball(dim: usize, order: usize, radius: f64, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("radius must be positive, got {radius}")));
        }
        Self::new(dim, order, build_grid(0.0, radius, cfg.grid_size, cfg.grid), cfg.quadrature)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.mids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quadrature
    }

    fn slope(&self, r: f64, flux: f64) -> f64 {
        if r == 0.0 || flux <= 0.0 {
            0.0
        } else {
            (flux * r.powi(self.order as i32 - self.dim as i32)).powf(1.0 / self.order as f64)
        }
    }

    /// Solves with node values `f` (and midpoint values in Simpson mode;
    /// linear interpolation is used when `f_mid` is `None`) and flux constant
    /// `c = r_0^{N-k} h'(r_0)^k` at the inner node.
    pub fn solve_values(&self, f: &[f64], f_mid: Option<&[f64]>, c: f64) -> RawSolution {
        let m = self.grid.len();
        debug_assert_eq!(f.len(), m);
        let mut hp = vec![0.0; m];
        let mut flux = c;
        hp[0] = self.slope(self.grid[0], flux);
        let mut hp_mid = Vec::new();
        for i in 0..m - 1 {
            let cell = &self.cells[i];
            match self.quadrature {
                Quadrature::Trapezoid => {
                    flux += self.kfac * (cell.lin[0] * f[i] + cell.lin[1] * f[i + 1]);
                }
                Quadrature::Simpson => {
                    let fm = f_mid.map_or(0.5 * (f[i] + f[i + 1]), |v| v[i]);
                    let q = &cell.quad_half;
                    let half = if f_mid.is_some() {
                        q[0] * f[i] + q[1] * fm + q[2] * f[i + 1]
                    } else {
                        cell.lin_half[0] * f[i] + cell.lin_half[1] * fm
                    };
                    hp_mid.push(self.slope(self.mids[i], flux + self.kfac * half));
                    let q = &cell.quad_full;
                    let full = if f_mid.is_some() {
                        q[0] * f[i] + q[1] * fm + q[2] * f[i + 1]
                    } else {
                        cell.lin[0] * f[i] + cell.lin[1] * f[i + 1]
                    };
                    flux += self.kfac * full;
                }
            }
            hp[i + 1] = self.slope(self.grid[i + 1], flux);
        }
        let mut h = vec![0.0; m];
        for i in (0..m - 1).rev() {
            let delta = self.grid[i + 1] - self.grid[i];
            let area = match self.quadrature {
                Quadrature::Trapezoid => 0.5 * delta * (hp[i] + hp[i + 1]),
                Quadrature::Simpson => delta / 6.0 * (hp[i] + 4.0 * hp_mid[i] + hp[i + 1]),
            };
            h[i] = h[i + 1] - area;
        }
        RawSolution { h, hp }
    }

    /// `h''` at the nodes: from the first integral when `analytic`, by
    /// centered differences otherwise. At the origin the limit
    /// `h''(0) = (K f(0)/N)^{1/k}` is used in both cases.
    pub fn second_derivative(&self, raw: &RawSolution, f: &[f64], analytic: bool) -> Vec<f64> {
        let (n, k) = (self.dim as f64, self.order as f64);
        let mut hpp = if analytic {
            self.grid
                .iter()
                .zip(&raw.hp)
                .zip(f)
                .map(|((&r, &p), &fv)| {
                    if r == 0.0 || p <= 0.0 {
                        0.0
                    } else {
                        (self.kfac * r.powi(self.order as i32 - 1) * fv / p.powi(self.order as i32 - 1)
                            - (n - k) * p / r)
                            / k
                    }
                })
                .collect()
        } else {
            derivative_of_radial_slope(&self.grid, &raw.hp)
        };
        if self.grid[0] == 0.0 {
            hpp[0] = (self.kfac * f[0].max(0.0) / n).powf(1.0 / k);
        }
        hpp
    }

    /// Assembles a profile and reports the worst scaled residual
    /// `|S_k - f| / (1 + |f|)` over the nodes.
    pub fn assemble(&self, raw: RawSolution, f: &[f64], analytic: bool) -> Result<(RadialProfile, f64)> {
        let hpp = self.second_derivative(&raw, f, analytic);
        let profile = RadialProfile::new(self.dim, self.order, self.grid.clone(), raw.h, raw.hp, hpp)?;
        let mut worst: f64 = 0.0;
        for (i, &fv) in f.iter().enumerate() {
            let s = profile.s_k_at(i)?;
            worst = worst.max((s - fv).abs() / (1.0 + fv.abs()));
        }
        Ok((profile, worst))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub grid_size: usize,
    pub refinements: usize,
    pub residual_max: f64,
}

fn source_values(f: &SourceTerm, solver: &RadialSolver) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let nodes: Vec<f64> = solver.grid().iter().map(|&r| f.eval(r)).collect();
    f.check_samples(&nodes)?;
    let mids = match solver.quadrature() {
        Quadrature::Simpson => {
            let v: Vec<f64> = solver.midpoints().iter().map(|&r| f.eval(r)).collect();
            f.check_samples(&v)?;
            Some(v)
        }
        Quadrature::Trapezoid => None,
    };
    Ok((nodes, mids))
}

fn finish(mut profile: RadialProfile, residual: f64, cfg: &SolverConfig) -> Result<RadialProfile> {
    let slack = cfg.tol_residual.max(1e-10);
    for i in 1..profile.len() - 1 {
        if !profile.k_convex_at(i, slack)? {
            return Err(Error::Inconsistency(format!(
                "solution leaves the closed cone at r = {} (residual {residual:e})",
                profile.grid[i]
            )));
        }
    }
    profile.k_convex = true;
    Ok(profile)
}

/// The k-convex radial solution of `S_k(D²u) = f` in `B_R` with `u = 0` on the
/// boundary, plus the residual report.
pub fn solve_radial_dirichlet_with_report(
    f: &SourceTerm,
    radius: f64,
    n: usize,
    k: usize,
    cfg: &SolverConfig,
) -> Result<(RadialProfile, SolveReport)> {
    check_order(k, n)?;
    cfg.validate()?;
    let mut cells = cfg.grid_size;
    let mut refinements = 0;
    loop {
        let solver = RadialSolver::ball(n, k, radius, &SolverConfig { grid_size: cells, ..*cfg })?;
        let (nodes, mids) = source_values(f, &solver)?;
        let raw = solver.solve_values(&nodes, mids.as_deref(), 0.0);
        let (profile, residual) = solver.assemble(raw, &nodes, f.is_evaluable())?;
        if residual <= cfg.tol_residual {
            let profile = finish(profile, residual, cfg)?;
            return Ok((profile, SolveReport { grid_size: cells, refinements, residual_max: residual }));
        }
        if !f.is_evaluable() || refinements >= cfg.refine_max {
            return Err(Error::Convergence(format!(
                "residual {residual:e} exceeds {:e} at grid size {cells}",
                cfg.tol_residual
            )));
        }
        cells *= 2;
        refinements += 1;
    }
}

pub fn solve_radial_dirichlet(f: &SourceTerm, radius: f64, n: usize, k: usize, cfg: &SolverConfig) -> Result<RadialProfile> {
    solve_radial_dirichlet_with_report(f, radius, n, k, cfg).map(|(p, _)| p)
}

/// Solution on the annulus `a < r < R` with `u(R) = 0` and `u(a) = inner`.
///
/// Only the branch with `h' ≥ 0` is covered, so `inner` may not exceed the
/// value at `a` of the solution with zero inner flux.
pub fn solve_annulus_dirichlet(
    f: &SourceTerm,
    inner_radius: f64,
    radius: f64,
    inner: f64,
    n: usize,
    k: usize,
    cfg: &SolverConfig,
) -> Result<(RadialProfile, SolveReport)> {
    check_order(k, n)?;
    cfg.validate()?;
    if !(inner_radius > 0.0 && inner_radius < radius) {
        return Err(Error::Domain(format!("need 0 < a < R, got a = {inner_radius}, R = {radius}")));
    }
    let solver = RadialSolver::new(n, k, build_grid(inner_radius, radius, cfg.grid_size, cfg.grid), cfg.quadrature)?;
    let (nodes, mids) = source_values(f, &solver)?;
    let inner_at = |c: f64| solver.solve_values(&nodes, mids.as_deref(), c).h[0];

    let base = inner_at(0.0);
    if inner > base {
        return Err(Error::Precondition(format!(
            "inner value {inner} exceeds {base}, the largest value reachable with h' >= 0"
        )));
    }
    let scale = inner_radius.powi(n as i32 - k as i32);
    let (mut lo, mut hi) = (0.0, scale.max(1e-300));
    while inner_at(hi) > inner {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NotFound { what: "inner flux constant".into(), bound: f64::MAX });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inner_at(mid) > inner {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = if (inner_at(lo) - inner).abs() <= (inner_at(hi) - inner).abs() { lo } else { hi };
    let raw = solver.solve_values(&nodes, mids.as_deref(), c);
    let (profile, residual) = solver.assemble(raw, &nodes, f.is_evaluable())?;
    if residual > cfg.tol_residual {
        return Err(Error::Convergence(format!("annulus residual {residual:e} exceeds {:e}", cfg.tol_residual)));
    }
    let profile = finish(profile, residual, cfg)?;
    Ok((profile, SolveReport { grid_size: cfg.grid_size, refinements: 0, residual_max: residual }))
}

/// `sup_{i≠j} |h_i - h_j| / |r_i - r_j|^α` over the nodes.
pub fn holder_seminorm(profile: &RadialProfile, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("Hölder exponent must lie in (0, 1], got {alpha}")));
    }
    let (r, h) = (&profile.grid, &profile.h);
    let mut best: f64 = 0.0;
    for i in 0..r.len() {
        for j in i + 1..r.len() {
            best = best.max((h[j] - h[i]).abs() / (r[j] - r[i]).powf(alpha));
        }
    }
    Ok(best)
}

/// `h(r) ≥ -C3 (R - r)` at every node with `R - r < d0`.
pub fn verify_boundary_growth(profile: &RadialProfile, c3: f64, d0: f64) -> bool {
    let big_r = profile.radius;
    profile.grid.iter().zip(&profile.h).filter(|(&r, _)| big_r - r < d0).all(|(&r, &h)| {
        let bound = -c3 * (big_r - r);
        h >= bound - 1e-12 * (1.0 + h.abs())
    })
}

/// The comparison implication on node data: `sub(R) ≤ super(R)` implies
/// `sub ≤ super` at every node.
pub fn classical_comparison_check(sub: &RadialProfile, sup: &RadialProfile, _c: f64) -> Result<bool> {
    if sub.len() != sup.len()
        || sub.grid.iter().zip(&sup.grid).any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + a.abs()))
    {
        return Err(Error::Domain("profiles live on different grids".into()));
    }
    let eps = 1e-12 * (1.0 + sub.sup_norm().max(sup.sup_norm()));
    let last = sub.len() - 1;
    if sub.h[last] > sup.h[last] + eps {
        return Ok(true);
    }
    Ok(sub.h.iter().zip(&sup.h).all(|(a, b)| *a <= *b + eps))
}
