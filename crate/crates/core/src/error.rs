use thiserror::Error;

use crate::cavity::FieldError;
use crate::cli::ConfigError;
use crate::dynamics::DynamicsError;
use crate::experiments::ExperimentError;
use crate::montecarlo::EstimationError;

/// Coarse error category, mapped onto process exit codes by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Numerical,
    Io,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 1,
            ErrorCategory::Numerical => 2,
            ErrorCategory::Io => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(e) => e.category(),
            Error::Field(FieldError::Io(_)) => ErrorCategory::Io,
            Error::Field(FieldError::NearNull { .. }) => ErrorCategory::Numerical,
            Error::Field(_) => ErrorCategory::Config,
            Error::Dynamics(_) => ErrorCategory::Numerical,
            Error::Estimation(e) => e.category(),
            Error::Experiment(e) => e.category(),
            Error::Io(_) => ErrorCategory::Io,
        }
    }
}
