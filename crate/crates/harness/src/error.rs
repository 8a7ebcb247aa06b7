use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numeric failure at step {step}: {detail}")]
    Numeric { step: u64, detail: String },

    #[error("non-finite loss {value} at grid point a={a}, b={b}")]
    NonFiniteCell { a: f64, b: f64, value: f64 },

    #[error(transparent)]
    Core(v0init_core::Error),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }

    /// 2 for anything caught before a run starts, 1 for failures during one.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Core errors raised while checking a config are config errors, whatever their kind.
    pub(crate) fn from_validation(err: v0init_core::Error) -> Self {
        HarnessError::Config(err.to_string())
    }

    /// Attaches the step index to a core error raised mid-run.
    pub(crate) fn at_step(step: u64, err: v0init_core::Error) -> Self {
        use v0init_core::Error as E;
        match err {
            E::GradientInvalid { .. } | E::NonFinite { .. } => HarnessError::Numeric {
                step,
                detail: err.to_string(),
            },
            other => HarnessError::Core(other),
        }
    }
}

impl From<v0init_core::Error> for HarnessError {
    fn from(err: v0init_core::Error) -> Self {
        match err {
            v0init_core::Error::InvalidConfig(msg) => HarnessError::Config(msg),
            v0init_core::Error::NonFinite { step, .. } => HarnessError::Numeric {
                step,
                detail: err.to_string(),
            },
            other => HarnessError::Core(other),
        }
    }
}
