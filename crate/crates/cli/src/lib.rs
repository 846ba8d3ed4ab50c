pub mod args;
pub mod check;
pub mod commands;
pub mod config;
pub mod output;

use std::fmt;

/// Failure classes with stable exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or parameters: exit 2.
    Usage(String),
    /// Solver, quadrature or invariant failure: exit 1.
    Compute(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Compute(_) | Self::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(msg) => write!(f, "usage error: {msg}"),
            Self::Compute(msg) => write!(f, "{msg}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

impl From<onion_core::Error> for CliError {
    fn from(e: onion_core::Error) -> Self {
        match e {
            onion_core::Error::InvalidArgument(msg) => Self::Usage(msg),
            other => Self::Compute(other.to_string()),
        }
    }
}
