//! Crate-wide error type.

use std::path::PathBuf;

use crate::model::Stage;

/// Coarse classification used by callers (notably the CLI) to map errors
/// onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad arguments or configuration values.
    Usage,
    /// Malformed, inconsistent, or incompatible data.
    Data,
    /// Degenerate geometry or numerically impossible request.
    Numeric,
}

impl std::fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ErrorCategory::Usage => "usage",
            ErrorCategory::Data => "data",
            ErrorCategory::Numeric => "numeric",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed label `{text}`: {reason}")]
    LabelParse { text: String, reason: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("sample location outside image at row {row}, col {col}")]
    OutOfBounds { row: usize, col: usize },

    #[error("wrong payload size: expected {expected} values, got {got}")]
    WrongSize { expected: usize, got: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("value {value} at index {index} outside [0,1]")]
    ValueOutOfRange { index: usize, value: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("wrong key stage: expected {expected}, got {got}")]
    WrongStage { expected: Stage, got: Stage },

    #[error("degenerate spread: median absolute deviation is zero")]
    DegenerateSpread,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("insufficient samples: need at least {need}, got {got}")]
    InsufficientSamples { need: usize, got: usize },

    #[error("rank deficiency: centered data has rank {rank}, need {need}")]
    RankDeficient { rank: usize, need: usize },

    #[error("label `{0}` is not enrolled")]
    UnknownLabel(String),

    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },

    #[error("{}:{line}: {msg}", path.display())]
    FormatAt {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(
        "enrollment database was produced by map {db:016x}, expected map {map:016x}"
    )]
    FingerprintMismatch { db: u64, map: u64 },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidArgument(_) => ErrorCategory::Usage,
            Error::InvalidGeometry(_)
            | Error::OutOfBounds { .. }
            | Error::DegenerateSpread
            | Error::DegenerateGeometry(_)
            | Error::InsufficientSamples { .. }
            | Error::RankDeficient { .. } => ErrorCategory::Numeric,
            _ => ErrorCategory::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
