//! Error type shared across the pipeline stages.

use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path} is not valid UTF-8 (first invalid byte at offset {offset})")]
    Decode { path: PathBuf, offset: usize },

    #[error("no documents found under {path}")]
    EmptyCorpus { path: PathBuf },

    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    /// Invalid argument or precondition violation on a library operation.
    #[error("{0}")]
    Argument(String),

    /// Sampling protocol cannot be applied to the data as given.
    #[error("{0}")]
    Protocol(String),

    /// Cross-references between artifacts do not line up.
    #[error("{0}")]
    Integrity(String),

    /// Sample labels do not follow the `<author>_<1|2>` convention.
    #[error("{0}")]
    Labeling(String),

    /// Bad configuration file or flag value.
    #[error("{0}")]
    Config(String),

    /// Author purity failed and the run was strict.
    #[error("author purity violated for: {}", .violations.join(", "))]
    Purity { violations: Vec<String> },

    /// A pipeline stage failed; names the stage for run output.
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Process exit code for the CLI: 1 usage, 2 data, 3 purity under strict.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Purity { .. } => 3,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 2,
        }
    }

    pub(crate) fn stage(stage: impl Into<String>, source: Error) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(source),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn write(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Write {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
