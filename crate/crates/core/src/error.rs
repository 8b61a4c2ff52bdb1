use std::path::PathBuf;

/// Errors produced by the refinement toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid image: {0}")]
    Image(String),

    #[error("invalid heat map: {0}")]
    HeatMap(String),

    #[error("manifest line {line}: {msg}")]
    Manifest { line: usize, msg: String },

    #[error("entry {id}: {msg}")]
    Entry { id: u64, msg: String },

    #[error("coarse match file: {0}")]
    Coarse(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("label file line {line}: {msg}")]
    Labels { line: usize, msg: String },

    #[error("results file line {line}: {msg}")]
    Results { line: usize, msg: String },

    #[error("benchmark file line {line}: {msg}")]
    Benchmark { line: usize, msg: String },

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("empty database")]
    EmptyDatabase,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("too few correspondences: need {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("no consensus: best model has {0} inliers")]
    NoConsensus(usize),

    #[error("pose outside the scene footprint")]
    OutsideFootprint,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
