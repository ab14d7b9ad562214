use thiserror::Error;

/// Errors produced by the estimation pipeline.
#[derive(Debug, Error)]
pub enum DpError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("undefined DP: {0}")]
    UndefinedDp(String),

    #[error("test undefined: {0}")]
    TestUndefined(String),

    #[error("inference unavailable: {0}")]
    InferenceUnavailable(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, DpError>;
