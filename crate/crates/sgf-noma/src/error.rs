use thiserror::Error;

/// Errors surfaced by the simulator, the learner and the I/O layer.
#[derive(Debug, Error)]
pub enum SgfNomaError {
    /// An invalid or inconsistent configuration value. The message names the
    /// offending key.
    #[error("configuration error: {0}")]
    Config(String),

    /// A vector or layer dimension does not match what the operation expects.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A non-finite value appeared where training must stay finite
    /// (gradients, losses, rewards).
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A checkpoint is missing or does not fit the requested configuration.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for SgfNomaError {
    fn from(e: serde_json::Error) -> Self {
        SgfNomaError::Serde(e.to_string())
    }
}

impl From<toml::de::Error> for SgfNomaError {
    fn from(e: toml::de::Error) -> Self {
        SgfNomaError::Config(e.to_string())
    }
}
