use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid element index (m={m}, n={n}) for a {n_z}x{n_x} array")]
    InvalidElementIndex {
        m: usize,
        n: usize,
        n_z: usize,
        n_x: usize,
    },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("emitter outside the pattern's differentiable support (alpha = {alpha})")]
    OutsidePatternSupport { alpha: f64 },
    #[error("snapshot block is empty")]
    EmptyBlock,
    #[error("matrix is not Hermitian (relative residual {residual:e})")]
    NonHermitian { residual: f64 },
    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
    #[error("elevation root out of range (cos theta = {value})")]
    ElevationRootOutOfRange { value: f64 },
    #[error("azimuth root out of range (cos phi = {value})")]
    AzimuthRootOutOfRange { value: f64 },
    #[error("azimuth unobservable near pole (sin theta = {sin_theta:e})")]
    AzimuthUnobservable { sin_theta: f64 },
    #[error("polynomial rooting failed: {0}")]
    Rooting(String),
    #[error("unidentifiable geometry: singular Fisher information (det = {det:e})")]
    UnidentifiableGeometry { det: f64 },
    #[error("estimation aborted after {attempts} failed attempts: {last}")]
    RetriesExhausted { attempts: usize, last: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
