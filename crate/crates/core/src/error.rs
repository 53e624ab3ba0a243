use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the region where a formula or chart is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A star-shaped domain is not admissible (non-positive radius, hemisphere cap exceeded).
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("assembly error: triangle {triangle} has non-positive area {area:e}")]
    Assembly { triangle: usize, area: f64 },

    #[error("no convergence after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// CG hit a non-positive curvature direction; the operator is not positive definite.
    #[error("solver breakdown at iteration {iterations} (relative residual {residual:e}): operator is indefinite")]
    Breakdown { iterations: usize, residual: f64 },

    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error("line search failed after {halvings} halvings at iteration {iteration}")]
    LineSearch { iteration: usize, halvings: usize },
}

impl Error {
    /// Whether an iterative solver (CG or the descent line search) failed.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::Breakdown { .. } | Error::LineSearch { .. })
    }
}
