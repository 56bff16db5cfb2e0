use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum PinnError {
    /// Invalid sizes, rates, counts or other static settings.
    #[error("configuration error: {0}")]
    Config(String),

    /// An API was called out of order or with handles it does not own.
    #[error("usage error: {0}")]
    Usage(String),

    /// A loss or gradient became non-finite or exceeded the divergence bound.
    #[error("training diverged at epoch {epoch}: {reason}")]
    Diverged { epoch: usize, reason: String },

    /// HMC potential was non-finite at the starting position.
    #[error("sampler aborted: {0}")]
    Sampler(String),

    /// Malformed files: checkpoints, chain dumps, CSV tables.
    #[error("schema error in {path}: {reason}")]
    Schema { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = PinnError> = std::result::Result<T, E>;

pub(crate) fn config_err(msg: impl Into<String>) -> PinnError {
    PinnError::Config(msg.into())
}

pub(crate) fn usage_err(msg: impl Into<String>) -> PinnError {
    PinnError::Usage(msg.into())
}
