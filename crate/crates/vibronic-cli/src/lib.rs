//! Library surface of the experiment runner, split out so the integration
//! tests can exercise config parsing and report formatting directly.

pub mod config;
pub mod experiments;
pub mod report;

use std::fmt;

/// Process-level error classes, mapped onto exit codes:
/// 0 success, 2 config error, 3 convergence-audit failure, 4 integrator
/// failure, 1 anything else.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Audit { detail: String, max_delta: f64 },
    Integrator(vibronic::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Audit { .. } => 3,
            CliError::Integrator(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Audit { detail, max_delta } => {
                write!(f, "convergence audit failed: {detail} (max delta {max_delta:.3e})")
            }
            CliError::Integrator(e) => write!(f, "integrator failure: {e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<vibronic::Error> for CliError {
    fn from(e: vibronic::Error) -> Self {
        match e {
            vibronic::Error::StepUnderflow { .. } | vibronic::Error::PositivityViolation { .. } => {
                CliError::Integrator(e)
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
