use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("capacity exceeded: dimension {dim} is above the cap {cap}")]
    Capacity { dim: usize, cap: usize },

    #[error("invalid chain specification: {0}")]
    Spec(String),

    #[error("temperature must be positive, got {0}")]
    Temperature(f64),

    #[error("trace deviates from one by {0:.3e}")]
    Trace(f64),

    #[error("rank-deficient density matrix: eigenvalue {0:.3e} is below the positivity floor")]
    RankDeficient(f64),

    #[error("Trotter slice must be positive, got {0}")]
    Tau(f64),

    #[error("temperature {t_prime} too high for tau {tau} (K = {k}); use a smaller tau")]
    TemperatureTooHigh { t_prime: f64, tau: f64, k: usize },

    #[error("boundary solver diverged at iteration {0}")]
    Divergence(usize),

    #[error("boundary operator is not positive: smallest eigenvalue {min:.3e}")]
    Positivity { min: f64, spectrum: Vec<f64> },

    #[error("LAPACK routine {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("detection failed: {0}")]
    Detection(String),

    #[error("scan failed: {0}")]
    ScanFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 1 for configuration problems, 2 for capacity
    /// limits, 3 for everything that goes wrong while computing.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Spec(_) | Error::InvalidModel(_) | Error::Tau(_) | Error::Temperature(_) => 1,
            Error::Capacity { .. } => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
