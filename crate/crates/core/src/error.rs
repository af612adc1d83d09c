use std::path::PathBuf;

/// Errors raised across the forecasting pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("undamped resonance singularity at omega = {omega} rad/s")]
    Singularity { omega: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("no overlapping valid times between forecasts and measurements")]
    EmptyIntersection,

    #[error("too few rows: need at least {needed}, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("missing lagged residual at {0}")]
    MissingLag(String),

    #[error("sampler initialization failed: {0}")]
    Initialization(String),

    #[error("sampler failure: {0}")]
    Sampler(String),

    #[error("chains did not converge: {param} has R-hat {rhat:.4} > {limit}")]
    Convergence { param: String, rhat: f64, limit: f64 },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for the CLI: 2 for validation problems, 3 for
    /// numerical or sampler failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Singularity { .. } | Error::Initialization(_) | Error::Sampler(_) | Error::Convergence { .. } => 3,
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
