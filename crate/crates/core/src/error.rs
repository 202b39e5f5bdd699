use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema line {line}: {message}")]
    Schema { line: usize, message: String },

    /// A malformed cell or row in a data file. `column` is 1-based, 0 means the whole row.
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("value {value} of attribute {attr} outside domain 1..={domain}")]
    Domain { attr: usize, value: i64, domain: u32 },

    #[error("cannot compute information of an empty histogram")]
    EmptyHistogram,

    #[error("inconsistent partition: {0}")]
    Consistency(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model format: {0}")]
    Model(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
