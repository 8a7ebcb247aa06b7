use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid shape {0:?}: every dimension must be at least 1")]
    InvalidShape(Vec<usize>),

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("data length {len} does not match shape {shape:?}")]
    LengthMismatch { len: usize, shape: Vec<usize> },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("need at least 2 gradient samples, got {0}")]
    InsufficientSamples(usize),

    #[error("gradient for tensor `{name}` contains a non-finite value")]
    GradientInvalid { name: String },

    #[error("non-finite value in {what} at step {step}")]
    NonFinite { what: String, step: u64 },

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("sign of a zero moment is undefined")]
    UndefinedSign,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate ratio: {0}")]
    DegenerateRatio(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
