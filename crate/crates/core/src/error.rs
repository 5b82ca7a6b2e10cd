use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("material `{material}`: wavelength {wavelength_nm} nm outside valid range [{lo}, {hi}] nm")]
    OutOfRange {
        material: String,
        wavelength_nm: f64,
        lo: f64,
        hi: f64,
    },

    #[error("material `{material}`: non-physical refractive index {index} at {wavelength_nm} nm")]
    NonPhysicalIndex {
        material: String,
        wavelength_nm: f64,
        index: f64,
    },

    #[error("{source_name}: {path}: {message}")]
    Parse {
        source_name: String,
        /// JSON path of the offending value, `.` for the document root.
        path: String,
        message: String,
    },

    #[error("duplicate material name `{0}`")]
    DuplicateMaterial(String),

    #[error("unknown material `{0}`")]
    UnknownMaterial(String),

    #[error("invalid stack: {0}")]
    InvalidStack(String),

    #[error("invalid dispersion model for `{material}`: {reason}")]
    InvalidDispersion { material: String, reason: String },

    #[error("grazing propagation in region {region} (|cos theta| = {cos_abs:e})")]
    DegenerateAngle { region: usize, cos_abs: f64 },

    #[error("singular structure matrix: |{element}| = {modulus:e}")]
    SingularStructure { element: &'static str, modulus: f64 },

    #[error("misuse: {0}")]
    Misuse(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("frequency {omega} rad/fs is not a grid node (nearest {nearest})")]
    OffGrid { omega: f64, nearest: f64 },

    #[error("efficiency undefined: reference spectrum vanishes at {omega} rad/fs")]
    UndefinedEfficiency { omega: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularStructure { .. } | Error::DegenerateAngle { .. }
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
