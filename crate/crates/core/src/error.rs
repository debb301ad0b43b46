use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("empty encounter {0}")]
    EmptyEncounter(String),

    #[error("hour {hour} out of range 1..={len}")]
    HourOutOfRange { hour: usize, len: usize },

    #[error("SOFA total {0} outside 0..=24")]
    TotalOutOfRange(i64),

    #[error("invalid bedside table: {0}")]
    BedsideTable(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("valid_len must be in 1..={len}, got {valid_len}")]
    MaskLength { valid_len: usize, len: usize },

    #[error("undefined AUC: labels contain a single class")]
    UndefinedAuc,

    #[error("non-finite score at index {0}")]
    NonFiniteScore(usize),

    #[error("mismatched encounter sets: {0}")]
    Mismatch(String),

    #[error("empty cohort")]
    EmptyCohort,

    #[error("invalid synthetic config: {0}")]
    Synth(String),

    #[error("corrupt container: {0}")]
    Container(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
