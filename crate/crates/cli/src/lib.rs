//! Experiment harness for fogcache: configuration, sweeps, reports and the
//! oracle verification suite.

pub mod config;
pub mod experiment;
pub mod report;
pub mod verify;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// Process exit code: 2 configuration, 3 solver, 4 verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}
