use thiserror::Error;

/// Errors raised by code construction, decoding and the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("construction failure: {0}")]
    ConstructionFailure(String),
    #[error("sampling failure: {0}")]
    SamplingFailure(String),
    #[error("search failure: {0}")]
    SearchFailure(String),
    #[error("malformed file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
