use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input: dimensions, axioms, masses, unparsable numbers.
    #[error("validation error: {0}")]
    Validation(String),

    /// An argument of the wrong shape was handed to a modality or lifting.
    #[error("kind mismatch: {0}")]
    KindMismatch(String),

    /// An enumeration would exceed its configured size limit.
    #[error("guard exceeded: {what} ({size} > limit {limit})")]
    Guard { what: String, size: u128, limit: u128 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A constructed certificate failed its own re-check.
    #[error("internal assertion failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn kind(msg: impl Into<String>) -> Self {
        Error::KindMismatch(msg.into())
    }
}
