use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum LesError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("too few points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    /// The segment score is undefined when every point is a hull vertex. Callers should
    /// average over the whole cloud instead.
    #[error("no non-hull points to score against; average over the full cloud instead")]
    EmptyInterior,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl LesError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LesError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            LesError::InvalidInput(_)
            | LesError::TooFewPoints { .. }
            | LesError::Parse { .. }
            | LesError::EmptyInterior => 2,
            LesError::Degenerate(_) => 3,
            LesError::Io { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, LesError>;
