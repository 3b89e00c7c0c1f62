use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed row at byte offset {offset}: {reason}")]
    MalformedRow { offset: u64, reason: &'static str },

    #[error("byte offset {offset} is beyond end of file ({size} bytes)")]
    OffsetBeyondEof { offset: u64, size: u64 },

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: not an index file (bad magic)")]
    BadMagic { path: PathBuf },

    #[error("{path}: index format version {found}, expected {expected}")]
    VersionMismatch {
        path: PathBuf,
        found: u16,
        expected: u16,
    },

    #[error("{path}: index is stale, the source corpus changed since it was built")]
    StaleIndex { path: PathBuf },

    #[error("{path}: index is truncated or corrupt ({reason})")]
    CorruptIndex { path: PathBuf, reason: String },

    #[error("wrong index kind: {0}")]
    WrongIndexKind(String),

    #[error("row {row} is out of range (1..={count})")]
    OutOfRange { row: u64, count: u64 },

    #[error("strategy unavailable: {0}")]
    StrategyUnavailable(String),

    #[error("sample size is zero")]
    ZeroSample,

    #[error("correctness failure: {0}")]
    CorrectnessFailure(String),

    #[error("missing planted rows: {0}")]
    MissingPlants(String),
}

impl Error {
    /// Stable machine-readable identifier, used by the CLI error prefix.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::MalformedRow { .. } => "malformed-row",
            Error::OffsetBeyondEof { .. } => "offset-beyond-eof",
            Error::InvalidSpec(_) => "invalid-spec",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::BadMagic { .. } => "bad-magic",
            Error::VersionMismatch { .. } => "version-mismatch",
            Error::StaleIndex { .. } => "stale-index",
            Error::CorruptIndex { .. } => "corrupt-index",
            Error::WrongIndexKind(_) => "wrong-index-kind",
            Error::OutOfRange { .. } => "out-of-range",
            Error::StrategyUnavailable(_) => "strategy-unavailable",
            Error::ZeroSample => "zero-sample",
            Error::CorrectnessFailure(_) => "correctness-failure",
            Error::MissingPlants(_) => "missing-plants",
        }
    }
}
