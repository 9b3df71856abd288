use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Fourier multiplier would overflow: exponent {exponent} exceeds {limit}")]
    AmplificationOverflow { exponent: f64, limit: f64 },

    #[error("negative analyticity radius {0} passed to a public multiplier")]
    NegativeRadius(f64),

    #[error("non-finite value detected in {0}")]
    NonFinite(&'static str),

    #[error("divergence at t = {t}: norm {norm} exceeds guard {guard}")]
    Divergence { t: f64, norm: f64, guard: f64 },

    #[error("field does not vanish at y = 0 (trace {0})")]
    TraceViolation(f64),

    #[error("unresolved field: {0}")]
    Unresolved(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
