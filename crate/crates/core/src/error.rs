use thiserror::Error;

/// Errors raised by the operators, line searches, problems and solver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("curvature condition violated: <gamma, delta> = {inner:e} not above {threshold:e}")]
    CurvatureViolation { inner: f64, threshold: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive definite (pivot {index} = {pivot:e}, threshold {threshold:e})")]
    NotPositiveDefinite { index: usize, pivot: f64, threshold: f64 },

    #[error("argument outside domain: {0}")]
    DomainError(String),

    #[error("direction is not a descent direction: <g, d> = {slope:e}")]
    NonDescentDirection { slope: f64 },

    #[error("{strategy} exhausted its budget of {budget} trial steps")]
    BudgetExhausted { strategy: &'static str, budget: usize },

    #[error("oracle returned a non-finite value: {0}")]
    OracleFailure(String),

    #[error("initial Hessian approximation failed: {0}")]
    InitFailure(String),

    #[error("missing reference solution: {0}")]
    MissingReference(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("invalid configuration field `{field}`: {message}")]
    ConfigError { field: String, message: String },
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        Error::DomainError(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
