use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image {width}x{height} is smaller than the {unit}px crop unit")]
    DimensionTooSmall {
        width: usize,
        height: usize,
        unit: usize,
    },

    #[error("dimension mismatch: expected {expected:?}, got {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("batch is empty")]
    EmptyBatch,

    #[error("non-finite value in input")]
    NonFiniteInput,

    #[error("padding margin {margin} too large for {width}x{height} image")]
    MarginTooLarge {
        margin: usize,
        width: usize,
        height: usize,
    },

    #[error("patch is not square: {width}x{height}")]
    NonSquarePatch { width: usize, height: usize },

    #[error("invalid blend window size {size}: must be even and at least 4")]
    InvalidSize { size: usize },

    #[error("invalid window configuration: {reason}")]
    InvalidWindow { reason: String },

    #[error("shape mismatch: expected {expected} elements, got {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("class id {value} out of range (must be < {limit})")]
    InvalidClassId { value: u8, limit: usize },

    #[error("zero baseline pixel count for class {class}: percent change undefined")]
    ZeroBaseline { class: usize },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("no line in {path} could be parsed ({lines} lines, all malformed)")]
    AllLinesMalformed { path: PathBuf, lines: usize },

    #[error("stoplist file {0} is unreadable or contains no words")]
    EmptyStoplistFile(PathBuf),

    #[error("term {0:?} is not indexed in the corpus statistics")]
    UnknownTerm(String),

    #[error("solution violates constraints: {0}")]
    InfeasibleSolution(String),

    #[error("run id mismatch: expected {expected:?}, found {found:?}")]
    RunIdMismatch { expected: String, found: String },

    #[error("invalid argument {arg}: {reason}")]
    InvalidArgument { arg: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid_arg(arg: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            arg,
            reason: reason.into(),
        }
    }
}
