use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("zero points")]
    EmptyCloud,

    #[error("point index {index} out of range for cloud of {len} points")]
    InvalidIndex { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cloud has no normals")]
    MissingNormals,

    #[error("degenerate benchmark: normals cancel out")]
    DegenerateBenchmark,

    #[error("no dominant direction in groove point set")]
    NoDominantDirection,

    #[error("groove too short")]
    GrooveTooShort,

    #[error("empty groove")]
    EmptyGroove,

    #[error("invalid workpiece spec: {0}")]
    InvalidSpec(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
