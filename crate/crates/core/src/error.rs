use thiserror::Error;

/// Errors produced by instance generation, evaluation and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("user placement failed after {attempts} attempts")]
    SamplingFailed { attempts: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("placement infeasible: BS {bs} caches {cached} files but its capacity is {capacity}")]
    Infeasible {
        bs: usize,
        cached: usize,
        capacity: usize,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unexpected end of file while reading {0}")]
    Truncated(String),

    #[error("format version mismatch: file is v{found}, reader supports v{supported}")]
    VersionMismatch { found: u32, supported: u32 },

    #[error("rate table does not match the requested parameters: {0}")]
    TableMismatch(String),

    #[error("non-finite message in round {round} on edge (variable {variable}, function {function})")]
    NonFiniteMessage {
        round: usize,
        variable: usize,
        function: usize,
    },

    #[error("greedy gains increased from {previous} to {current} at step {step}")]
    GainIncrease {
        step: usize,
        previous: f64,
        current: f64,
    },

    #[error("instance too large for exhaustive search: {0} candidate placements")]
    TooLarge(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
