use thiserror::Error;

/// Errors produced by the simulation core.
#[derive(Debug, Error)]
pub enum Error {
    /// The requested quantity is not defined at this operating point.
    #[error("numeric domain error: {0}")]
    Domain(String),

    #[error("{quantity} = {value} is outside the valid range [{min}, {max}]")]
    OutOfRange {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    /// Input carries no usable information (empty, all-zero, flat).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The sampling grid cannot hold the propagated signal.
    #[error("grid error: {0}")]
    Grid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A data file violated its format; `line` is 1-based.
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: msg.into(),
        }
    }
}
