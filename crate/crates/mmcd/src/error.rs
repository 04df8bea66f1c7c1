use thiserror::Error;

/// Errors raised by the estimation and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix dimensions do not conform.
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    /// A matrix that must be symmetric is not, beyond the 1e-12 relative band.
    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:.3e})")]
    NotSymmetric { max_asymmetry: f64 },

    /// Symmetric factorization failed: the matrix is not positive definite.
    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { pivot: f64, index: usize },

    /// Data contains NaN or infinite entries.
    #[error("non-finite value at observation {observation}, entry ({row}, {col})")]
    NonFinite {
        observation: usize,
        row: usize,
        col: usize,
    },

    /// A subset is too small for the requested fit.
    #[error("subset of size {got} is too small: need at least {required} observations")]
    SubsetTooSmall { required: usize, got: usize },

    /// An intermediate covariance estimate became singular.
    #[error("singular covariance estimate at iteration {iteration}")]
    SingularEstimate { iteration: usize },

    /// Invalid configuration or argument value.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Every initial subset produced a singular fit.
    #[error("all {attempts} trial subsets produced singular fits; data is degenerate")]
    AllTrialsDegenerate { attempts: usize },

    /// Iterated concentration steps did not reach a fixed point.
    #[error("concentration steps did not reach a fixed point within {max_steps} iterations")]
    CStepExceeded { max_steps: usize },

    /// The objective increased across a concentration step.
    #[error("objective increased by {increase:.3e} across a concentration step")]
    CStepIncrease { increase: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
