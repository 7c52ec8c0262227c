//! Error type shared by every module of the toolkit.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse grouping of errors, used by front-ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad configuration or arguments supplied by the caller.
    Usage,
    /// Input data is missing, malformed or violates a precondition.
    Data,
    /// An external trainer misbehaved.
    Trainer,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("JSON error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("corrupt payload: {0}")]
    CorruptPayload(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("not a single-file NIfTI-1 image: {0}")]
    NotNifti(String),
    #[error("expected a 3D image, header declares {0} dimensions")]
    Dimensionality(i16),
    #[error("non-finite voxel value at linear index {0}")]
    NonFiniteVoxel(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid intensity window: lo ({lo}) must be below hi ({hi})")]
    InvalidWindow { lo: f64, hi: f64 },
    #[error("label mask has no nonzero voxels")]
    EmptyLabel,
    #[error("geometry mismatch: {0}")]
    Geometry(String),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("item {id}: {source}")]
    Item {
        id: String,
        #[source]
        source: Box<Error>,
    },
    #[error("budget {budget} exceeds the {available} available items")]
    Budget { budget: usize, available: usize },
    #[error("split error: {0}")]
    Split(String),
    #[error("search space error: {0}")]
    Mode(String),
    #[error("cannot build proxy schedule: {0}")]
    Schedule(String),
    #[error("trainer timed out after {0:.1} s")]
    Timeout(f64),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("trainer crashed: {0}")]
    CrashedTrainer(String),
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("division by zero: {0}")]
    Division(String),
    #[error("reports are not aligned: {0}")]
    Alignment(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn for_item(self, id: &str) -> Self {
        Error::Item {
            id: id.to_string(),
            source: Box::new(self),
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Timeout(_) | Error::Protocol(_) | Error::CrashedTrainer(_) => {
                ErrorCategory::Trainer
            }
            Error::Mode(_) | Error::Schedule(_) => ErrorCategory::Usage,
            Error::Item { source, .. } => source.category(),
            _ => ErrorCategory::Data,
        }
    }
}
