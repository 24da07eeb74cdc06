use thiserror::Error;

/// Errors reported by the kernels and layout utilities.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid tile parameters: {0}")]
    InvalidParams(String),

    #[error("index ({row}, {col}) out of range for padded shape {rows}x{cols}")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("layout error: {0}")]
    Layout(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed tensor file: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn mismatch(msg: impl Into<String>) -> Error {
    Error::DimensionMismatch(msg.into())
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
