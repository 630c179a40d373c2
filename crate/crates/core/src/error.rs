use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A profile, vector, or matrix does not conform to the game's dimensions.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An argument violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An iterative solver did not reach its tolerance.
    #[error("solver failure: {message} (residual {residual:.3e} after {iterations} iterations)")]
    SolverFailure {
        message: String,
        residual: f64,
        iterations: usize,
    },

    /// A numerical routine produced an unusable result (non-convergence of an
    /// eigenvalue iteration, loss of stability under perturbation, ...).
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
