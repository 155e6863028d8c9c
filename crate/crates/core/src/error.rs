use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("too few samples: {0}")]
    TooFewSamples(String),

    #[error("covariance matrix is singular or not positive definite")]
    SingularCovariance,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("argument outside the function domain: {0}")]
    DomainError(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("variance is degenerate (below {0:e})")]
    DegenerateVariance(f64),

    #[error("invalid cluster count k={k} for n={n} items")]
    InvalidK { k: usize, n: usize },

    #[error("zero vector where a direction is required")]
    ZeroVector,

    #[error("class means coincide, no separating direction")]
    DegenerateSeparation,

    #[error("ground truth contains no change points")]
    NoTrueBoundaries,

    #[error("invalid generator parameters: {0}")]
    InvalidVariantParams(String),

    #[error("invalid input data: {0}")]
    InvalidData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the numbers rather than by the caller.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularCovariance
                | Error::DegenerateVariance(_)
                | Error::DegenerateSeparation
                | Error::ZeroVector
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
