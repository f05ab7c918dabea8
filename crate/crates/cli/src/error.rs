//! Command line error classification, mapped onto process exit codes.

use std::process::ExitCode;

/// A failed command, classified by which stage of the pipeline broke.
///
/// The classes map onto exit codes so scripted callers can distinguish a
/// bad input from a failed computation: schema and input-data violations
/// exit with 2, simulation failures with 3 and fits that terminate without
/// a usable optimum with 4.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed configuration, data file or command line combination.
    #[error("{0}")]
    Schema(String),
    /// The configured computation itself failed.
    #[error("{0}")]
    Simulation(String),
    /// The fit terminated without converging to an identifiable optimum.
    #[error("{0}")]
    NonConvergence(String),
}

impl CliError {
    /// The process exit code reported for this error class.
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Schema(_) => ExitCode::from(2),
            CliError::Simulation(_) => ExitCode::from(3),
            CliError::NonConvergence(_) => ExitCode::from(4),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Wraps an underlying error as a schema violation.
pub fn schema(err: impl std::fmt::Display) -> CliError {
    CliError::Schema(err.to_string())
}

/// Wraps an underlying error as a simulation failure.
pub fn simulation(err: impl std::fmt::Display) -> CliError {
    CliError::Simulation(err.to_string())
}
