use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the testbed.
///
/// Variants are grouped by how the CLI reports them: configuration problems,
/// data/schema problems, numeric divergence, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("rejected input: {0}")]
    RejectedInput(String),

    #[error("invalid action index {index} (action space has {cardinality} actions)")]
    InvalidAction { index: usize, cardinality: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate scaler: series has a single distinct value {0}")]
    DegenerateScaler(f64),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("model is untrained: {0}")]
    Untrained(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by `ztnctl`: 2 invalid config, 3 data/schema, 4 divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) | Error::InvalidAction { .. } => 2,
            Error::Divergence { .. } => 4,
            Error::RejectedInput(_)
            | Error::Shape { .. }
            | Error::InsufficientData(_)
            | Error::DegenerateScaler(_)
            | Error::Untrained(_)
            | Error::Schema(_)
            | Error::Format(_)
            | Error::Io { .. } => 3,
        }
    }
}
