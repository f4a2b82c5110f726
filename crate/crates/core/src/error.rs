use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("channel mismatch: expected {expected} channel(s), found {found}")]
    ChannelMismatch { expected: usize, found: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("decode failure: {0}")]
    Decode(String),

    #[error("encode failure: {0}")]
    Encode(String),

    #[error("decomposition too deep: level {level} needs at least {needed} px per side, plane is {height}x{width}")]
    DecompositionTooDeep {
        level: usize,
        needed: usize,
        height: usize,
        width: usize,
    },

    #[error("corrupt pyramid: {0}")]
    CorruptPyramid(String),

    #[error("watermark too large: {height}x{width} exceeds the 128x128 limit")]
    WatermarkTooLarge { height: usize, width: usize },

    #[error("insufficient capacity: low-frequency band is {ll_height}x{ll_width}, watermark tile is {tile_height}x{tile_width}; use a lower level or a smaller watermark")]
    InsufficientCapacity {
        ll_height: usize,
        ll_width: usize,
        tile_height: usize,
        tile_width: usize,
    },

    #[error("realign required: suspect is {suspect_height}x{suspect_width}, host is {host_height}x{host_width}")]
    RealignRequired {
        suspect_height: usize,
        suspect_width: usize,
        host_height: usize,
        host_width: usize,
    },

    #[error("bad attack parameter: {0}")]
    BadAttackParameter(String),

    #[error("no realignment defined for attack kind '{0}'")]
    NoRealignment(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("report error: {0}")]
    Report(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Capacity and geometry violations, as opposed to I/O or argument problems.
    pub fn is_constraint(&self) -> bool {
        matches!(
            self,
            Error::WatermarkTooLarge { .. }
                | Error::InsufficientCapacity { .. }
                | Error::RealignRequired { .. }
                | Error::DecompositionTooDeep { .. }
                | Error::ChannelMismatch { .. }
                | Error::ShapeMismatch(_)
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::UnsupportedFormat(_)
                | Error::Decode(_)
                | Error::Encode(_)
                | Error::Report(_)
        )
    }
}
