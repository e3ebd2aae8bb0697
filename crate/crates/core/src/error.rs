use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed arguments: wrong lengths, out-of-range indices, bad shapes.
    #[error("invalid input: {0}")]
    Input(String),

    /// A configuration that can never produce a valid result.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The covariance matrix could not be factorized even after jitter escalation.
    #[error("numerical failure: {msg} (final jitter {jitter:e})")]
    Numerical { msg: String, jitter: f64 },

    #[error("objective evaluation failed: {0}")]
    Objective(String),

    #[error("run file schema version {found} is not supported (expected {expected})")]
    Schema { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
