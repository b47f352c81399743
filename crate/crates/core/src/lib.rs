//! k-Hessian operators `S_k(D²u) = σ_k(λ(D²u))` on Gårding cones.
//!
//! Cone algebra, radial calculus, boundary barriers, an exact radial
//! Dirichlet solver and a bisection estimator for the principal eigenvalue
//! `λ₁⁻` of `S_k(D²ψ) + λ ψ|ψ|^{k-1} = 0` on balls.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cones;
pub mod dirichlet;
pub mod eigen;
pub mod error;
pub mod geometry;
mod poly;
pub mod radial;
pub mod symfun;

pub use cones::{AdmissibleJet, SymMatrix};
pub use dirichlet::{SolverConfig, SourceTerm};
pub use eigen::{IterationConfig, SpectralEstimate};
pub use error::{Error, Result};
pub use geometry::{CurvatureField, TubeSpec};
pub use radial::{BarrierParams, RadialProfile};
pub use symfun::{EigenSpectrum, SigmaVector};
