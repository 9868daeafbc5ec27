use thiserror::Error;

/// Errors produced by the prediction pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("zero-norm vector in cosine mode ({0})")]
    ZeroNorm(&'static str),

    #[error("class {class} has {got} samples, need at least {need}")]
    InsufficientSamples {
        class: usize,
        got: usize,
        need: usize,
    },

    #[error("covariance unavailable for class {0}")]
    CovarianceUnavailable(usize),

    #[error("zero variance on output neuron {neuron} of class {class}")]
    ZeroVariance { class: usize, neuron: usize },

    #[error("cholesky factorization failed for class {0} after regularization")]
    Cholesky(usize),

    #[error("singular normal matrix in ridge solve")]
    SingularSystem,

    #[error("index {index} out of range for {len} classes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Cholesky(_) | Error::SingularSystem | Error::ZeroVariance { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
