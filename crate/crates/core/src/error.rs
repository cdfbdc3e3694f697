use thiserror::Error;

/// Errors produced by the simulation and analysis kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("solver did not converge after {iterations} iterations (max residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("magnetic field must be positive at z = {position:e} m, got {field:e} T")]
    FieldSign { position: f64, field: f64 },

    #[error("normal equations are rank deficient in parameter `{parameter}`")]
    RankDeficient { parameter: String },

    #[error("cannot normalize: net peak signal is {0:e}")]
    Normalization(f64),

    #[error("thermometry undefined: {0}")]
    Thermometry(String),

    #[error("singular linear system")]
    Singular,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
