use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point outside the unit hypercube: {0:?}")]
    OutOfDomain(Vec<f64>),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The Gram matrix stayed indefinite after the largest jitter was added.
    #[error("Gram matrix not positive definite after jitter escalation up to {jitter:e}")]
    NumericalFailure { jitter: f64 },

    #[error("invalid fixed cost {0}: must be strictly positive")]
    InvalidCost(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("requested {requested} grid points, capacity is {limit}")]
    Capacity { requested: usize, limit: usize },

    #[error("front is empty")]
    EmptyFront,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
