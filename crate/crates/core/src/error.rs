use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Dimension {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("invalid parameter for {op}: {message}")]
    Parameter { op: &'static str, message: String },

    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("empty sequence passed to {0}")]
    EmptySequence(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema error: missing column {column}")]
    Schema { column: String },

    #[error("line {line}: {message}")]
    Row { line: u64, message: String },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("feature spec error: column {column} has zero variance")]
    ConstantColumn { column: String },

    #[error("training diverged at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

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

    /// Short stable tag used in machine-readable CLI output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::Parameter { .. } => "parameter",
            Error::NonFinite { .. } => "non_finite",
            Error::Contract(_) => "contract",
            Error::EmptySequence(_) => "empty_sequence",
            Error::Config(_) => "config",
            Error::Schema { .. } => "schema",
            Error::Row { .. } => "row",
            Error::EmptyDataset(_) => "empty_dataset",
            Error::ConstantColumn { .. } => "constant_column",
            Error::Divergence { .. } => "divergence",
            Error::Checkpoint(_) => "checkpoint",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
