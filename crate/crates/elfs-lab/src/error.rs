//! Error taxonomy shared by every module. `Validation` maps to CLI exit
//! code 2, `Numerical` to exit code 3.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (bad graph text, contract violations).
    #[error("validation error: {0}")]
    Validation(String),
    /// A numerical identity or tolerance failed where exactness was promised.
    #[error("numerical tolerance failure: {0}")]
    Numerical(String),
    /// A budget (steps, retries, truncation length) was exhausted.
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
    pub fn budget(msg: impl Into<String>) -> Self {
        Error::Budget(msg.into())
    }
}
