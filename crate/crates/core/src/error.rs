use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("matrix is not Hermitian")]
    NotHermitian,

    #[error("non-physical density (n0 = {n0}, |n⃗| = {spin}): {reason}")]
    NonPhysical {
        n0: f64,
        spin: f64,
        reason: &'static str,
    },

    #[error("time step {dt} exceeds the stability bound {bound}")]
    StabilityViolation { dt: f64, bound: f64 },

    #[error("non-finite value in {field} at step {step} (t = {time})")]
    NonFinite {
        field: &'static str,
        step: usize,
        time: f64,
    },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
