use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a physical formula.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A parameter set or configuration violates one of its invariants.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("validation error on line {line}: {message}")]
    RowValidation { line: u64, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    /// The calibration data cannot determine the model parameters.
    #[error("unidentifiable: {0}")]
    Unidentifiable(String),

    #[error("detection error: {0}")]
    Detection(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
