use thiserror::Error;

/// Errors raised by the k-Hessian toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (bad order `k`,
    /// evaluation at the origin of a punctured formula, non-symmetric input).
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A search over a parameter range failed to find an admissible value.
    #[error("not found: {what} (searched up to {bound:e})")]
    NotFound { what: String, bound: f64 },

    /// An iterative routine stopped without meeting its tolerance.
    #[error("no convergence: {0}")]
    Convergence(String),

    /// Numerical results contradict a structural property that must hold
    /// (e.g. a non-monotone iterate sequence).
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_order(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::Domain(format!("order k = {k} must satisfy 1 <= k <= N = {n}")));
    }
    Ok(())
}
