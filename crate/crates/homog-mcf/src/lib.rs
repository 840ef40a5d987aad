//! Command-line companion to `homog-mcf-core`: configuration files,
//! deterministic report emission (JSON, CSV, SVG), a bounded worker pool,
//! and the subcommand implementations.

pub mod config;
pub mod formats;
pub mod pool;
pub mod report;
pub mod runner;

use std::fmt;

/// CLI-level failure classes, mapped onto exit codes: validation and I/O
/// problems exit 1, numerical failures exit 2.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<homog_mcf_core::CoreError> for CliError {
    fn from(e: homog_mcf_core::CoreError) -> CliError {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
