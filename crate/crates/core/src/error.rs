use std::io;

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An operation received arguments that break its shape or value contract.
    #[error("contract violation: {0}")]
    Contract(String),
    /// An invalid configuration value.
    #[error("configuration error: {0}")]
    Config(String),
    /// Input data is missing required fields or columns.
    #[error("schema error: {0}")]
    Schema(String),
    /// Input data is present but malformed.
    #[error("format error: {0}")]
    Format(String),
    /// Data cannot be processed as requested (too short, gaps, empty channels).
    #[error("data error: {0}")]
    Data(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    /// Non-finite values appeared during a numerical computation.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
