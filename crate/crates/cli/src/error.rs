use qzk_core::Error as CoreError;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INVARIANT: i32 = 1;
    pub const INVALID: i32 = 2;
    pub const IO: i32 = 3;
    pub const INFEASIBLE: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Invariant(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => exit::INVALID,
            CliError::Io(_) => exit::IO,
            CliError::Infeasible(_) => exit::INFEASIBLE,
            CliError::Invariant(_) => exit::INVARIANT,
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Parse(_) => CliError::Io(e.to_string()),
            CoreError::DegreeCapExceeded { .. } => CliError::Infeasible(e.to_string()),
            CoreError::NotHermitian { .. }
            | CoreError::NotDensity { .. }
            | CoreError::NoConvergence(_)
            | CoreError::RecurrenceUnstable { .. } => CliError::Invariant(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
