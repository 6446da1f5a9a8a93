//! Process-level error classification. Every failure funnels into one of
//! four exit codes so scripts can distinguish bad input from a failed run:
//! 1 file I/O, 3 configuration, 4 solver, 5 failed self-checks. Usage
//! errors exit 2 through the argument parser.

use corrobem::bem::SolverError;
use corrobem::diagnostics::DiagnosticError;
use corrobem::geometry::ConfigError;
use corrobem::imaging::ImagingError;
use corrobem::ntd::NtdError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("self-checks failed: {0}")]
    Diagnostics(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl AppError {
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Io(_) => 1,
            AppError::Config(_) => 3,
            AppError::Solver(_) => 4,
            AppError::Diagnostics(_) => 5,
        }
    }
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Config(e.to_string())
    }
}

impl From<SolverError> for AppError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Geometry(g) => g.into(),
            other => AppError::Solver(other.to_string()),
        }
    }
}

impl From<NtdError> for AppError {
    fn from(e: NtdError) -> Self {
        match e {
            NtdError::Forward(s) => s.into(),
            NtdError::Io(io) => AppError::Io(io.to_string()),
            other => AppError::Solver(other.to_string()),
        }
    }
}

impl From<ImagingError> for AppError {
    fn from(e: ImagingError) -> Self {
        AppError::Config(e.to_string())
    }
}

impl From<DiagnosticError> for AppError {
    fn from(e: DiagnosticError) -> Self {
        match e {
            DiagnosticError::Solver(s) => s.into(),
            DiagnosticError::Gap(g) => g.into(),
            probe @ DiagnosticError::Probe { .. } => AppError::Config(probe.to_string()),
            DiagnosticError::GeometryMismatch => {
                AppError::Config(DiagnosticError::GeometryMismatch.to_string())
            }
            empty @ DiagnosticError::EmptyInput(_) => AppError::Config(empty.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for AppError {
    fn from(e: serde_json::Error) -> Self {
        AppError::Io(e.to_string())
    }
}
