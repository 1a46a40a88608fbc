//! Crate-level error type and its mapping to process exit codes.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A truncation parameter is too small for the requested computation.
    #[error("truncation starvation: {0}")]
    Starvation(String),
    /// An internal consistency check failed.
    #[error("invariant failure: {0}")]
    Invariant(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Precondition(_) => 2,
            Error::Starvation(_) => 3,
            Error::Invariant(_) => 4,
        }
    }
}

impl From<crate::exact::ExactError> for Error {
    fn from(e: crate::exact::ExactError) -> Self {
        Error::Precondition(e.to_string())
    }
}
