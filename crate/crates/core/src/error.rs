use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    /// Iterative solver did not reach the requested tolerance.
    #[error("solver failure after {iterations} iterations (relative residual {residual:.3e}): {reason}")]
    SolverFailure {
        iterations: usize,
        residual: f64,
        reason: String,
        residual_history: Vec<f64>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
