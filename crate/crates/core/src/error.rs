use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("design space line {line}: {message}")]
    SpaceParse { line: usize, message: String },

    #[error("duplicate dimension name `{0}`")]
    DuplicateDimension(String),

    #[error("dimension `{dimension}` lists candidate `{candidate}` twice")]
    DuplicateCandidate { dimension: String, candidate: String },

    #[error("dimension `{0}` needs at least two candidates")]
    SingleCandidate(String),

    #[error("design space has no dimensions")]
    EmptySpace,

    #[error("invalid design tuple {tuple:?}: {reason}")]
    InvalidTuple { tuple: Vec<usize>, reason: String },

    #[error("stale modification: dimension {dimension} holds choice {actual}, expected {expected}")]
    StaleModification {
        dimension: usize,
        expected: usize,
        actual: usize,
    },

    #[error("architectures {0} and {1} are not 1-hop neighbors")]
    NotNeighbors(String, String),

    #[error("records row {row}: {message}")]
    Record { row: usize, message: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("unknown task `{0}`")]
    UnknownTask(String),

    #[error("statistic schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt file {path}: {message}")]
    Corrupt { path: PathBuf, message: String },

    #[error("design space fingerprint mismatch: checkpoint {found}, loaded space {expected}")]
    SpaceMismatch { found: String, expected: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("oracle failed on {tuple:?}: {message}")]
    Oracle { tuple: Vec<usize>, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
