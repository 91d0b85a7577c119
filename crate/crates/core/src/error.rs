//! Error type shared by the whole crate.
//!
//! Every variant carries a category string so front-ends can map failures to
//! exit codes without matching on variants: everything a user can cause by
//! bad flags, bad files or an unreachable privacy target is "user" territory,
//! while `Contract` marks violated internal invariants.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Io(#[from] std::io::Error),

    /// Malformed binary/IDX input (bad magic, truncation, overflow).
    #[error("{0}")]
    Format(String),

    /// Malformed text input (CSV cells, config lines).
    #[error("{0}")]
    Parse(String),

    /// Invalid parameters or parameter combinations.
    #[error("{0}")]
    Config(String),

    /// Non-finite or otherwise unusable numeric data.
    #[error("{0}")]
    Numeric(String),

    /// Privacy accounting cannot produce a finite answer.
    #[error("{0}")]
    Accounting(String),

    /// Noise calibration could not reach the requested target.
    #[error("{0}")]
    Calibration(String),

    /// An internal invariant was violated; always a bug.
    #[error("{0}")]
    Contract(String),
}

impl Error {
    /// Short machine-readable category, stable across releases.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::Format(_) => "format",
            Error::Parse(_) => "parse",
            Error::Config(_) => "config",
            Error::Numeric(_) => "numeric",
            Error::Accounting(_) => "accounting",
            Error::Calibration(_) => "calibration",
            Error::Contract(_) => "internal",
        }
    }

    /// Process exit code for CLI front-ends: 2 for anything the user can fix,
    /// 1 for internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Contract(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
