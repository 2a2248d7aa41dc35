use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid function descriptor: {0}")]
    InvalidFunction(String),

    #[error("{family} does not support derivatives of order {order}")]
    UnsupportedDerivative { family: &'static str, order: u32 },

    #[error("operation requires a Gaussian mixture, got {0}")]
    UnsupportedFamily(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("t = {t} exceeds the box measure {measure}")]
    DomainExceeded { t: f64, measure: f64 },

    #[error("invalid index: {0}")]
    InvalidIndex(String),

    #[error("unsupported index: {0}")]
    UnsupportedIndex(String),

    #[error("integral diverges: {0}")]
    NonIntegrable(String),

    #[error("index violation: {0}")]
    IndexViolation(String),

    #[error("invalid set family: {0}")]
    InvalidFamily(String),

    #[error("heat kernel at h = {h} needs half width {needed}, box has {half_width}")]
    KernelTooWide { h: f64, needed: f64, half_width: f64 },

    #[error("quadrature underresolved: endpoint residuals ({lower:e}, {upper:e}) exceed {tolerance:e}")]
    QuadratureUnderresolved { lower: f64, upper: f64, tolerance: f64 },

    #[error("sequence is identically zero")]
    ZeroSequence,

    #[error("monotonicity violated: {0}")]
    MonotonicityViolated(String),

    #[error("tail integral diverges: {0}")]
    TailDivergent(String),

    #[error("not bijective: {0}")]
    NotBijective(String),

    #[error("inadmissible parameters: {0}")]
    AdmissibilityViolation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status: 3 for internal numeric failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(_) | Error::QuadratureUnderresolved { .. } | Error::TailDivergent(_) => 3,
            _ => 1,
        }
    }
}
