use thiserror::Error;

/// Errors produced by the calibration library.
#[derive(Debug, Error)]
pub enum EmosError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid predictive law: {0}")]
    InvalidLaw(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("optimizer error: {0}")]
    Optimizer(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, EmosError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(EmosError::Domain(msg.into()))
}
