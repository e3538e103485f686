use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The problem data violates a structural invariant.
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A line search or factorization failed where the theory says it cannot.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),

    #[error("degenerate quadrature: {0}")]
    DegenerateQuadrature(String),

    #[error("no convergence after {iterations} iterations (eps = {eps:e})")]
    NonConvergence { iterations: u64, eps: f64 },
}
