use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by loading, scoring and reporting.
#[derive(Debug, Error)]
pub enum UrqaError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("unsupported format{}: {reason}", path_suffix(.path))]
    UnsupportedFormat {
        path: Option<PathBuf>,
        reason: String,
    },

    #[error("deformation field contains a non-finite value at index {index}")]
    NonFiniteField { index: usize },

    #[error("image has a single intensity level ({level}); no threshold separates it")]
    DegenerateImage { level: u8 },

    #[error("dimension mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: usize,
        left_height: usize,
        right_width: usize,
        right_height: usize,
    },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty input")]
    EmptyInput,

    #[error("deformation field is {width}x{height}; at least 3x3 is required")]
    FieldTooSmall { width: usize, height: usize },

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

fn path_suffix(path: &Option<PathBuf>) -> String {
    match path {
        Some(p) => format!(" ({})", p.display()),
        None => String::new(),
    }
}

impl UrqaError {
    pub(crate) fn unsupported(path: Option<&std::path::Path>, reason: impl Into<String>) -> Self {
        UrqaError::UnsupportedFormat {
            path: path.map(|p| p.to_path_buf()),
            reason: reason.into(),
        }
    }

    pub(crate) fn dims(left: (usize, usize), right: (usize, usize)) -> Self {
        UrqaError::DimensionMismatch {
            left_width: left.0,
            left_height: left.1,
            right_width: right.0,
            right_height: right.1,
        }
    }
}

pub type Result<T> = std::result::Result<T, UrqaError>;
