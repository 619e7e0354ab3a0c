use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("color count must be at least 1")]
    ZeroColors,
    #[error("edge color {color} out of range for {colors} colors")]
    ColorOutOfRange { color: u32, colors: u32 },
    #[error("coordinate ({x}, {y}) outside the {width}x{height} lattice")]
    OutOfRange {
        x: i64,
        y: i64,
        width: usize,
        height: usize,
    },
    #[error("operation requires a periodic lattice")]
    NotPeriodic,
    #[error("lattice is {width}x{height} but {colors} colors need {expected}x{expected}")]
    DimensionMismatch {
        width: usize,
        height: usize,
        colors: u32,
        expected: usize,
    },
    #[error("{0} color count required, got {1}")]
    Parity(&'static str, u32),
    #[error("search refused for {colors} colors (set the override to run it anyway)")]
    ResourceGuard { colors: u32 },
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("size mismatch: expected {expected:?}, got {actual:?}")]
    SizeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("missing entry: {0}")]
    Missing(String),
    #[error("masked region has no boundary data: {0}")]
    NoBoundary(String),
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("remote inpainting failed: {0}")]
    Remote(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown tile id {0}")]
    UnknownTile(String),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Io {
            path: path.into(),
            source,
        })
    }
}
