use thiserror::Error;

#[derive(Debug, Error)]
pub enum AbpError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    /// The selected child of a nested adaptive could not be located in its parent.
    #[error("nested adaptive is inconsistent: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, AbpError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> AbpError {
    AbpError::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
