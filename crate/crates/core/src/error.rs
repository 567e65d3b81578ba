use thiserror::Error;

/// Errors raised by the model library.
///
/// Non-existence of the MLE is not an error: it is reported through
/// [`crate::solver::Existence`] on a [`crate::solver::FitResult`].
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid parameter vector: {0}")]
    InvalidParameters(String),

    #[error("every event and actor was removed while pruning zero-degree nodes")]
    AllPruned,

    #[error("augmented Fisher entry v_(m+n,m+n) = {0} is not positive")]
    SingularAugmented(f64),

    #[error("dense inverse requested for dimension {dim}, limit is {limit}")]
    TooLarge { dim: usize, limit: usize },

    #[error("Fisher information matrix is numerically singular")]
    NumericallySingular,

    #[error("contrast requires two distinct indices, got {0} twice")]
    SameIndex(usize),

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("confidence level must lie in (0, 1), got {0}")]
    BadLevel(f64),

    #[error("standard error must be positive and finite, got {0}")]
    BadStandardError(f64),

    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("non-binary entry {value:?} at line {line}")]
    NonBinaryEntry { line: usize, value: String },

    #[error("input contains no data")]
    EmptyInput,

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
