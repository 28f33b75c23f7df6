use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameters outside the valid range of a measure family or operation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A lemma precondition or structural contract was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Adaptive quadrature hit its subdivision cap before meeting tolerance.
    #[error("quadrature did not converge (partial value {partial:e}, error estimate {error:e})")]
    Quadrature { partial: f64, error: f64 },

    #[error("moment of order {order} diverges")]
    Divergent { order: f64 },

    #[error("tail mass still above 1/N at annulus index {cap}; measure tail too heavy")]
    HeavyTail { cap: u32 },

    /// Problem too large for the exact solver at desk scale.
    #[error("resource guard: {0}")]
    ResourceGuard(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) | Error::Json(_) => 2,
            Error::Contract(_) => 3,
            Error::ResourceGuard(_) | Error::HeavyTail { .. } => 4,
            _ => 1,
        }
    }
}
