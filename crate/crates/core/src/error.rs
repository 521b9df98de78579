use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("cannot resample from {source_hz} Hz up to {target_hz} Hz")]
    Upsampling { source_hz: f64, target_hz: f64 },

    #[error("{path}: no entries")]
    EmptyManifest { path: PathBuf },

    #[error("{path}, line {line}: {message}")]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Recording { path: PathBuf, message: String },

    #[error("{path}: not an IMAIR file")]
    BadMagic { path: PathBuf },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("training data is missing classes: {0}")]
    MissingClasses(String),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("fold {fold_id}: {source}")]
    Fold {
        fold_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: png encoding failed: {message}")]
    Png { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the failure is caused by the input data or arguments rather
    /// than by a defect or an environment problem. Missing or truncated
    /// input files count as data errors; other I/O failures do not.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Io { source, .. } => matches!(
                source.kind(),
                io::ErrorKind::NotFound | io::ErrorKind::InvalidData | io::ErrorKind::UnexpectedEof
            ),
            Error::Png { .. } => false,
            Error::Fold { source, .. } => source.is_data_error(),
            _ => true,
        }
    }
}
