//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by grid, solver and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid input shape, parameter or configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A computed state contains NaN or infinite values.
    #[error("diverged state: {0}")]
    Diverged(String),

    /// A fit or estimate cannot be trusted on the supplied data.
    #[error("estimation unreliable: {0}")]
    EstimationUnreliable(String),

    /// Writing an artifact failed.
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
