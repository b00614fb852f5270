use std::fmt;

use hokm_core::Error;

/// Failures surfaced by the binary, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Core(Error),
    ValidationFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ValidationFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 5,
            CliError::Core(e) => match e {
                Error::Resonance { .. } | Error::ResonanceRetriesExhausted(_) => 3,
                Error::Divergence { .. } => 4,
                Error::Io(_) => 5,
                Error::Numerical(_) | Error::EmptyWindow(_) | Error::Domain { .. } => 6,
                Error::InvalidSize(_)
                | Error::IndexOutOfRange { .. }
                | Error::Parameter(_)
                | Error::DimensionMismatch { .. }
                | Error::Parse { .. } => 2,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::ValidationFailed(k) => write!(f, "{k} validation check(s) failed"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
