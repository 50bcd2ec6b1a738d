use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report. The CLI maps these onto exit codes
/// through [`Error::kind`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("attribute value {value} at class {row}, attribute {column} exceeds scale maximum {scale_max}")]
    Range {
        row: usize,
        column: usize,
        value: f64,
        scale_max: f64,
    },

    #[error("feature file format error: {0}")]
    Format(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("clustering error: {0}")]
    Cluster(String),

    #[error("degenerate cluster: every attribute is irrelevant or unremarkable")]
    DegenerateCluster,

    #[error("training error: {0}")]
    Training(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Coarse error classes used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    DataFormat,
    Protocol,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Param(_) => ErrorKind::Config,
            Error::Parse { .. }
            | Error::Range { .. }
            | Error::Format(_)
            | Error::Io { .. }
            | Error::Json { .. }
            | Error::Dimension(_) => ErrorKind::DataFormat,
            Error::Protocol(_) | Error::Split(_) => ErrorKind::Protocol,
            Error::Cluster(_)
            | Error::DegenerateCluster
            | Error::Training(_)
            | Error::Numerical(_) => ErrorKind::Numerical,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
