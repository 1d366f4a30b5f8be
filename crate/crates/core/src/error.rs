//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A required dataset file is absent.
    #[error("dataset file not found: {path}")]
    DatasetLoad { path: PathBuf },

    /// A dataset file exists but its contents are malformed.
    #[error("format error in {file} line {line}: {message}")]
    Format {
        file: String,
        line: usize,
        message: String,
    },

    /// Caller supplied arguments that violate an operation's preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Tensor dimensions do not line up.
    #[error("shape error: {0}")]
    Shape(String),

    /// A numeric precondition failed (non-finite values, zero vectors, ...).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Requested state (e.g. a checkpoint) was never recorded.
    #[error("state error: {0}")]
    State(String),

    /// Training loss became non-finite.
    #[error("training diverged at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },

    /// Cholesky factorization failed even after jitter escalation.
    #[error("Cholesky breakdown on working set {working_set:?}")]
    SolverBreakdown { working_set: Vec<usize> },

    /// Active-set iteration cap was exceeded.
    #[error("solver failed to converge within {iterations} iterations (KKT residual {kkt_residual:.3e})")]
    SolverIterationCap {
        iterations: usize,
        kkt_residual: f64,
    },

    /// The optimizer returned an empty active set; callers fall back to the
    /// nearest neighbor's label and flag the record.
    #[error("empty active set")]
    EmptyActiveSet,

    /// An identifier was not found where required (e.g. graph id not in test split).
    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the error stems from user input or configuration rather
    /// than a runtime/numeric failure. The CLI maps this to exit code 2.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::DatasetLoad { .. }
                | Error::Format { .. }
                | Error::InvalidInput(_)
                | Error::State(_)
                | Error::Lookup(_)
                | Error::Io(_)
        )
    }
}
