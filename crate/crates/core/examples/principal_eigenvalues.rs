//! Prints λ₁ estimates on the unit ball for a few `(N, k)` pairs.
//!
//! `cargo run --release -p khess-core --example principal_eigenvalues`

use khess::dirichlet::SolverConfig;
use khess::eigen::{estimate_lambda1, IterationConfig};

fn main() -> khess::Result<()> {
    println!("{:>2} {:>2} {:>14} {:>14} {:>12} {:>8}", "N", "k", "lambda_best", "rayleigh", "residual", "probes");
    for (n, k) in [(2, 1), (2, 2), (3, 2), (3, 3), (4, 3)] {
        let e = estimate_lambda1(1.0, n, k, &IterationConfig::default(), &SolverConfig::default())?;
        println!(
            "{n:>2} {k:>2} {:>14.6} {:>14.6} {:>12.3e} {:>8}",
            e.lambda_best,
            e.rayleigh,
            e.residual_max,
            e.probes.len()
        );
    }
    Ok(())
}
