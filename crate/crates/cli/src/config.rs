use std::path::Path;

use khess::dirichlet::{GridKind, Quadrature, SolverConfig};
use khess::eigen::{BisectTol, IterationConfig};
use serde::Deserialize;

/// Flat `key = value` file; keys mirror `SolverConfig` and `IterationConfig`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub grid_size: Option<usize>,
    pub quadrature: Option<Quadrature>,
    pub tol_residual: Option<f64>,
    pub refine_max: Option<usize>,
    pub grid: Option<GridKind>,
    pub sup_cap: Option<f64>,
    pub n_max: Option<usize>,
    pub fixed_point_tol: Option<f64>,
    /// Relative to the initial bracket.
    pub bisect_tol: Option<f64>,
    pub bisect_tol_abs: Option<f64>,
    pub probes_per_round: Option<usize>,
    pub warmup: Option<usize>,
    pub growth_window: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<(Self, String)> {
        let text = std::fs::read_to_string(path)?;
        let cfg: FileConfig = toml::from_str(&text).map_err(|e| khess::Error::Parse(format!("{}: {e}", path.display())))?;
        Ok((cfg, text))
    }

    pub fn solver(&self) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            grid_size: self.grid_size.unwrap_or(d.grid_size),
            quadrature: self.quadrature.unwrap_or(d.quadrature),
            tol_residual: self.tol_residual.unwrap_or(d.tol_residual),
            refine_max: self.refine_max.unwrap_or(d.refine_max),
            grid: self.grid.unwrap_or(d.grid),
        }
    }

    pub fn iteration(&self) -> IterationConfig {
        let d = IterationConfig::default();
        let bisect_tol = match (self.bisect_tol_abs, self.bisect_tol) {
            (Some(a), _) => BisectTol::Absolute(a),
            (None, Some(r)) => BisectTol::Relative(r),
            (None, None) => d.bisect_tol,
        };
        IterationConfig {
            sup_cap: self.sup_cap.unwrap_or(d.sup_cap),
            n_max: self.n_max.unwrap_or(d.n_max),
            fixed_point_tol: self.fixed_point_tol.unwrap_or(d.fixed_point_tol),
            bisect_tol,
            probes_per_round: self.probes_per_round.unwrap_or(d.probes_per_round),
            warmup: self.warmup.unwrap_or(d.warmup),
            growth_window: self.growth_window.unwrap_or(d.growth_window),
        }
    }
}
