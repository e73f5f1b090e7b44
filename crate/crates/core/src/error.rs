use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input did not match the expected JSON schema.
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("unknown {kind} label `{label}`")]
    UnknownLabel { kind: &'static str, label: String },

    #[error("mention `{mention}` span [{start}, {end}) is out of bounds ({reason})")]
    SpanOutOfBounds {
        mention: String,
        start: usize,
        end: usize,
        reason: String,
    },

    #[error("mention id `{0}` is referenced but not defined")]
    UndefinedMention(String),

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("embedding table: {0}")]
    Embedding(String),

    #[error("no embedding for `{0}`")]
    MissingEmbedding(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown node id `{0}`")]
    UnknownNode(String),

    #[error("graph is empty")]
    EmptyGraph,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("training diverged: {0}")]
    NonFiniteLoss(String),

    #[error("at `{path}`: {source}")]
    AtPath {
        path: String,
        #[source]
        source: Box<Error>,
    },

    /// Wraps another error with the file and line it came from.
    #[error("{file}:{line}: {source}")]
    AtLine {
        file: PathBuf,
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn schema(path: impl Into<String>, message: impl ToString) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn at_line(self, file: impl Into<PathBuf>, line: usize) -> Self {
        Error::AtLine {
            file: file.into(),
            line,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad user input rather than by the tool itself.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::AtLine { source, .. } | Error::AtPath { source, .. } => source.is_validation(),
            Error::Io { .. } | Error::NonFiniteLoss(_) | Error::Shape(_) => false,
            _ => true,
        }
    }
}
