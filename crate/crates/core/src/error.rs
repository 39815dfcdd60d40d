use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("under-resolved grid: {0}")]
    UnderResolved(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    #[error("weight is not radial in each coordinate: {0}")]
    NonRadialWeight(String),

    #[error("not a frame: {0}")]
    NotAFrame(String),

    #[error("envelope fails the GRS condition: {0}")]
    GrsViolation(String),

    #[error("iterative solve did not converge: {0}")]
    SolverFailure(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
