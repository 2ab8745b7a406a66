use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions {width}x{height}: {reason}")]
    Dimensions {
        width: usize,
        height: usize,
        reason: String,
    },

    #[error("image {width}x{height} is too small for radius {radius} (needs more than {min} pixels per axis)")]
    ImageTooSmall {
        width: usize,
        height: usize,
        radius: f64,
        min: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("channel mismatch: expected {expected}, found {found}")]
    ChannelMismatch { expected: String, found: String },

    #[error("feature layout mismatch: model expects layout {expected}, got {found}")]
    LayoutMismatch { expected: String, found: String },

    #[error("feature dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("histogram set has no training mass")]
    EmptyTrainingMass,

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },

    #[error("tile (row {row}, col {col}): {source}")]
    Tile {
        row: usize,
        col: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
