use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error classes, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Io,
    Numeric,
    Alignment,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate window [{start}, {end}): {reason}")]
    DegenerateWindow {
        start: usize,
        end: usize,
        reason: &'static str,
    },

    #[error("window too short: need at least {needed} points, got {got}")]
    WindowTooShort { needed: usize, got: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("score buffer is empty; seed calibration before predicting")]
    EmptyBuffer,

    #[error("integration blew up at step {step}: non-finite state")]
    NumericBlowup { step: usize },

    #[error("least-squares solve failed: {0}")]
    Solve(String),

    #[error("{path}:{line}: {message}")]
    Csv {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("alignment error at index {index}: {message}")]
    Alignment { index: i64, message: String },

    #[error("trace is missing indices {start}..={end}")]
    MissingTrace { start: i64, end: i64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
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

    /// Wraps the error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Stage { source, .. } => source.kind(),
            Error::Io { .. } => ErrorKind::Io,
            Error::Alignment { .. } | Error::MissingTrace { .. } => ErrorKind::Alignment,
            Error::DegenerateWindow { .. }
            | Error::NonFinite(_)
            | Error::EmptyBuffer
            | Error::NumericBlowup { .. }
            | Error::Solve(_) => ErrorKind::Numeric,
            Error::InvalidSeries(_)
            | Error::InvalidSplit(_)
            | Error::InvalidParameter(_)
            | Error::WindowTooShort { .. }
            | Error::Csv { .. }
            | Error::Json(_) => ErrorKind::Config,
        }
    }
}
