//! Error type shared across the library.

use thiserror::Error;

/// Library-wide error enum. Variants map onto the CLI exit-code contract:
/// input/config/domain problems are user errors, numeric problems are
/// evaluation failures, convergence is a soft warning condition.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data (bad cell, wrong column count, unknown type token, ...).
    #[error("input error: {0}")]
    Input(String),

    /// A value violated a documented domain precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration (hyperparameters, sampler settings, CLI flags).
    #[error("config error: {0}")]
    Config(String),

    /// A numeric evaluation produced a non-finite result or a factorization failed.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Convergence diagnostics exceeded their warning threshold.
    #[error("convergence warning: {0}")]
    Convergence(String),

    /// Filesystem-level failure while reading or writing run artifacts.
    #[error("io error: {context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn convergence(msg: impl Into<String>) -> Self {
        Error::Convergence(msg.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Stable machine-readable category token, used by the CLI for its
    /// single-line failure reports and exit codes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Input(_) => "input",
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::Numeric(_) => "numeric",
            Error::Convergence(_) => "convergence",
            Error::Io { .. } => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
