use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed record: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("line {line}: {field} = {value} out of range (limit {limit})")]
    OutOfRange {
        line: usize,
        field: &'static str,
        value: u64,
        limit: u64,
    },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid workload profile `{name}`: {reason}")]
    InvalidProfile { name: String, reason: String },

    #[error("class `{0}` has no training subsequences")]
    EmptyClass(String),

    #[error("labels appear in both known and unknown sets: {0:?}")]
    LabelOverlap(Vec<String>),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("training loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("detector input matrix is all zeros")]
    ZeroMatrix,

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal {off:e})")]
    EigenFailure { sweeps: usize, off: f64 },

    #[error("detector for class {0} is not calibrated")]
    UncalibratedDetector(usize),

    #[error("feature layout mismatch: expected {expected}, got {got}")]
    LayoutMismatch { expected: String, got: String },

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt bundle: {0}")]
    CorruptBundle(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no complete subsequence: trace has {len} records, subsequence length is {subseq_len}")]
    NoCompleteSubsequence { len: usize, subseq_len: usize },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
