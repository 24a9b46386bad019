use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),

    #[error("label not binary: row {row} has label `{value}`")]
    LabelNotBinary { row: usize, value: String },

    #[error("row {row}, column `{column}`: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("feature `{0}` has zero variance")]
    ZeroVariance(String),

    #[error("only one class present")]
    SingleClass,

    /// A subsample or out-of-bag evaluation set lost one of the two classes.
    #[error("class_exhaustion: {0}")]
    ClassExhaustion(String),

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("degenerate pairing: differences are constant and nonzero")]
    DegeneratePairing,

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("no overlap between the AUC ranges of the two traces")]
    NoOverlap,

    #[error("gap inconsistent with population: window {window} exceeds population {population}")]
    GapInconsistent { window: u64, population: u64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
