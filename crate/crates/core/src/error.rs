use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("2d-variation exponent is unknown for tabulated covariance; supply rho explicitly")]
    UnknownRho,
    #[error("covariance not PSD: factorization failed at row {row} after jitter {jitter:e}")]
    CovarianceNotPsd { row: usize, jitter: f64 },
    #[error("numeric error in {what} at {location}")]
    Numeric { what: String, location: String },
    #[error("contract error: {0}")]
    Contract(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    /// Exit code used by the command line driver: 2 for invalid input, 3 for
    /// failures of the numerics themselves.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::CovarianceNotPsd { .. } | Error::Numeric { .. } => 3,
            Error::Io(_) | Error::Csv(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
