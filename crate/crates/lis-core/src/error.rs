//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by log ingestion, training, evaluation and the leakage
/// pipeline. Variants are grouped so callers can map them onto exit codes:
/// configuration problems, data problems, and numeric failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: field `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("unknown event file format `{0}` (expected jsonl or csv)")]
    UnknownFormat(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("empty eval set: no events in [{train_end}, {train_end} + {eval_window})")]
    EmptyEvalSet { train_end: i64, eval_window: i64 },

    #[error("AUC undefined: eval set contains only class {0}")]
    AucUndefined(u8),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("leak slot `{0}` declared in schema but no value supplied")]
    MissingLeakValue(String),

    #[error("leak slot `{0}` supplied but not declared in schema")]
    UndeclaredLeakSlot(String),

    #[error("dense slot `{slot}` dimension mismatch: expected {expected}, got {got}")]
    DenseDimMismatch {
        slot: String,
        expected: usize,
        got: usize,
    },

    #[error("embedding width mismatch: model has {model}, snapshot has {snapshot}")]
    EmbedDimMismatch { model: usize, snapshot: usize },

    #[error("snapshot date {snapshot} is not after model cutoff {cutoff}")]
    SnapshotNotFuture { snapshot: i64, cutoff: i64 },

    #[error("leak source does not cover the required horizon: {0}")]
    HorizonMismatch(String),

    #[error("filter too strict: no items with at least {min_updates} updates in both snapshot and content table")]
    FilterTooStrict { min_updates: u64 },

    #[error("item overlap between alignment set and evaluation period: {count} shared items (first: {first})")]
    ItemOverlap { count: usize, first: u64 },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by the shape or content of input data rather
    /// than by configuration or numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Io { .. }
                | Error::EmptyEvalSet { .. }
                | Error::AucUndefined(_)
                | Error::MissingLeakValue(_)
                | Error::UndeclaredLeakSlot(_)
                | Error::HorizonMismatch(_)
                | Error::FilterTooStrict { .. }
                | Error::ItemOverlap { .. }
                | Error::EmbedDimMismatch { .. }
                | Error::SnapshotNotFuture { .. }
                | Error::DenseDimMismatch { .. }
        )
    }

    pub fn is_numeric_error(&self) -> bool {
        matches!(self, Error::Numeric(_))
    }
}
