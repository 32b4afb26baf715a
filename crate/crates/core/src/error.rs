use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("empty sequence: {0}")]
    EmptySequence(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("corpus error: {0}")]
    Corpus(String),

    /// A malformed record in an input file; `line` is 1-based.
    #[error("data error in {path} at line {line}: {message}")]
    Data {
        path: String,
        line: usize,
        message: String,
    },

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("label error: {0}")]
    Label(String),

    #[error("distillation error: {0}")]
    Distillation(String),

    #[error("missing teacher: {0}")]
    MissingTeacher(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("training diverged: non-finite loss at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },

    #[error("bench error: {0}")]
    Bench(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    /// Process exit code for the command-line tool: 2 data, 3 missing
    /// teacher, 4 config mismatch, 5 I/O, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Data { .. }
            | Error::Corpus(_)
            | Error::Encoding(_)
            | Error::Label(_)
            | Error::Validation(_)
            | Error::EmptySequence(_)
            | Error::Json(_) => 2,
            Error::MissingTeacher(_) | Error::Distillation(_) => 3,
            Error::Config(_) => 4,
            Error::Io { .. } | Error::Checkpoint(_) => 5,
            Error::Dimension(_) | Error::Divergence { .. } | Error::Bench(_) => 1,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
