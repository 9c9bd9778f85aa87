use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported constellation order {0} (expected 4 or 16)")]
    UnsupportedOrder(usize),
    #[error("expected {expected} bits, got {actual}")]
    BitLength { expected: usize, actual: usize },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("point {0} is not in the inner constellation")]
    NotInnerPoint(crate::Complex64),
    #[error("shaping index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: u64, limit: u64 },
    #[error("codeword weight {weight} exceeds sparsity {sparsity}")]
    InvalidWeight { weight: usize, sparsity: usize },
    #[error("invalid shaping code: {0}")]
    InvalidShapingCode(String),
    #[error("malformed alist: {0}")]
    Alist(String),
    #[error("parity-check matrix is rank deficient (rank {rank} < {rows})")]
    RankDeficient { rank: usize, rows: usize },
    #[error("pulse span {span} too small for max delay index {max_delay:.3}")]
    PulseSpan { span: usize, max_delay: f64 },
    #[error("zero pilot value at resource element {0}")]
    ZeroPilot(usize),
    #[error("singular interpolation system")]
    SingularSystem,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("covariance cache {path}: {reason}")]
    Cache { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("plot: {0}")]
    Plot(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the filesystem rather than by bad input.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Csv(_) | Error::Cache { .. })
    }
}
