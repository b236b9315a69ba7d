use std::path::PathBuf;

/// Errors produced by the geometry, remap, metrics and annotation layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("outside field of view: incidence {incidence:.6} rad exceeds half-FOV {half_fov:.6} rad")]
    OutOfFov { incidence: f64, half_fov: f64 },

    #[error("point lies behind the tangent plane (denominator {denominator:e})")]
    BehindPlane { denominator: f64 },

    #[error("object not visible: no model point projects inside the field of view")]
    NotVisible,

    #[error("format error: {0}")]
    Format(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
