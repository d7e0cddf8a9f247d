use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the extraction and classification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed audio: {0}")]
    Format(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("signal too short: need {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("empty result: {0}")]
    EmptyResult(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("ill-conditioned frame: reflection coefficient {k} at stage {stage}")]
    IllConditioned { stage: usize, k: f64 },

    #[error("insufficient voicing: {0}")]
    InsufficientVoicing(String),

    #[error("filter bank resolution: {0}")]
    Resolution(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("recording {id}: {source}")]
    Recording {
        id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a recording identifier to an error raised while processing it.
    pub fn for_recording(self, id: impl Into<String>) -> Self {
        Error::Recording {
            id: id.into(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by the data rather than by usage or config.
    pub fn is_data_error(&self) -> bool {
        !matches!(
            self,
            Error::Argument(_) | Error::Config(_) | Error::State(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
