//! Error type shared by every stage of the toolkit.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied an invalid value (empty data, non-finite number, bad share).
    #[error("input error: {0}")]
    Input(String),

    /// Series that must share a timestamp grid do not.
    #[error("alignment error: {0}")]
    Alignment(String),

    /// A value outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Least-squares calibration failed.
    #[error("calibration error: {message} (dependent columns: {})", columns.join(", "))]
    Calibration { message: String, columns: Vec<String> },

    /// A structural precondition between two objects was violated
    /// (schema mismatch, length mismatch, missing columns).
    #[error("contract error: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Input data is well-formed but unusable (gaps, out-of-range values).
    #[error("data error: {0}")]
    Data(String),

    #[error("{}:{line}: parse error: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    /// Wraps an error with the pipeline stage that raised it.
    #[error("[{stage}] {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// Process exit code: 2 configuration, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::Config(_) => 2,
            Error::Input(_)
            | Error::Contract(_)
            | Error::Io { .. }
            | Error::Parse { .. }
            | Error::Data(_)
            | Error::Alignment(_) => 3,
            Error::Domain(_) | Error::Calibration { .. } | Error::Numeric(_) => 4,
        }
    }
}
