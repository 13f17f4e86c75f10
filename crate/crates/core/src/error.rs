use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("label column {0} not found")]
    MissingLabelColumn(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("cannot split: {0}")]
    Split(String),

    #[error("mask has no selected features")]
    EmptyMask,

    #[error("mask has no unselected features")]
    FullMask,

    #[error("mask length {got} does not match {expected} features")]
    MaskLength { expected: usize, got: usize },

    #[error("fitness budget of {budget} evaluations exhausted")]
    BudgetExhausted { budget: usize },

    #[error("k = {k} exceeds training set size {n}")]
    KTooLarge { k: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("continuation engine `{engine}` violated its contract: {msg}")]
    EngineContract { engine: String, msg: String },

    #[error("invalid statistics input: {0}")]
    Stats(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
