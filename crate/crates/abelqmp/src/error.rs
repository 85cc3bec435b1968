use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("group mismatch: {0} vs {1}")]
    GroupMismatch(String, String),
    #[error("invalid homomorphism at entry ({row},{col}): {detail}")]
    InvalidHom {
        row: usize,
        col: usize,
        detail: String,
    },
    #[error("homomorphism is not surjective (image order {image} < target order {target})")]
    NotSurjective { image: usize, target: usize },
    #[error("map is not an automorphism")]
    NotAutomorphism,
    #[error("support condition violated at character {0}")]
    SupportViolation(String),
    #[error("{0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for failures of numerical procedures rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
