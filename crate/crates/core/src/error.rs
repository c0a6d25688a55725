use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An orbit landed on a point where the map is undefined (Gauss map at 0).
    #[error("degenerate orbit state at step {step}: {reason}")]
    DegenerateState { step: u64, reason: String },

    /// An orbit point coincided with the singular site.
    #[error("orbit hit the singular site exactly at step {step}")]
    DegenerateHit { step: u64 },

    #[error("quadrature did not reach tolerance {tolerance:e} (estimate {estimate:e}, error {error:e})")]
    QuadratureFailure { tolerance: f64, estimate: f64, error: f64 },

    #[error("root bracket [{lo}, {hi}] does not contain a sign change")]
    RootFindFailure { lo: f64, hi: f64 },

    #[error("cannot trim {k} terms from a sum of {n} terms")]
    InsufficientPoints { k: usize, n: u64 },

    #[error("wrong regime: {0}")]
    WrongRegime(String),

    #[error("only {found} samples in the tail decade, need at least {needed}")]
    InsufficientTail { found: usize, needed: usize },

    #[error("config error{}: field `{field}`: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        field: String,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failure: {0}")]
    Serialize(String),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            line: None,
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that discard a single replica rather than abort a run.
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::DegenerateHit { .. } | Error::DegenerateState { .. })
    }
}
