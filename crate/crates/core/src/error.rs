use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum ZedError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("representation does not exist: {0}")]
    RepresentationDoesNotExist(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("tolerance-sensitive result: {0}")]
    ToleranceSensitive(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("containment violation: {0}")]
    Containment(String),

    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("cache format error: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ZedError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            ZedError::Parameter(_)
            | ZedError::Unsupported(_)
            | ZedError::RepresentationDoesNotExist(_) => 2,
            ZedError::Capacity(_) => 3,
            ZedError::ToleranceSensitive(_) => 4,
            _ => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, ZedError>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(ZedError::Parameter(msg.into()))
}
