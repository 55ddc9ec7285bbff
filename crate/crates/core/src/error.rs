use thiserror::Error;

pub type Result<T, E = NrpaError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum NrpaError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl NrpaError {
    pub(crate) fn format(what: &'static str, reason: impl Into<String>) -> Self {
        NrpaError::Format {
            what,
            reason: reason.into(),
        }
    }
}
