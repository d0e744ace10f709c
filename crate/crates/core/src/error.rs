use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("integration diverged at t = {time}: {reason}")]
    IntegrationDiverged { time: f64, reason: String },

    #[error("no convergence after {periods} periods (residual {residual:.3e})")]
    NonConvergence { periods: usize, residual: f64 },

    #[error("config error{}: {message}", .key.as_ref().map(|k| format!(" in `{k}`")).unwrap_or_default())]
    Config { key: Option<String>, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::NumericalFailure(msg.into())
    }

    pub(crate) fn config_key(key: &str, msg: impl Into<String>) -> Self {
        Error::Config {
            key: Some(key.to_string()),
            message: msg.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
