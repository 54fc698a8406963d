use thiserror::Error;

/// Errors raised by the schemes, samplers and drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("no convergence at level {level} after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        level: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("singular linear system at level {level}: {detail}")]
    Singular { level: usize, detail: String },

    #[error("elimination is inconsistent: {0}")]
    EliminationInconsistent(String),

    #[error("scenario has no exact values for {0}")]
    NoExactSolution(String),

    #[error("peak lies on the boundary of the search window")]
    UntrackablePeak,

    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config key `{key}`: {message}")]
    Constraint { key: String, message: String },

    #[error("usage: {0}")]
    Usage(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
