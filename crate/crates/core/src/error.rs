use thiserror::Error;

/// Errors shared across the library.
///
/// Variants split into two camps the CLI cares about: bad input
/// (dimension, parameter, config, unknown names) and numerical failure
/// (quadrature, non-finite values, degenerate geometry). `is_usage_error`
/// tells them apart.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown map name: {0}")]
    UnknownMap(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("evaluation at the singular point")]
    SingularPoint,
    #[error("map is not differentiable at this point: {0}")]
    NotDifferentiable(String),
    #[error("point escapes the outer map's domain")]
    DomainEscape,
    #[error("finite-difference stencil would cross the singular point (|x - b| <= 10h)")]
    StepCrossesSingularity,
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("curve {index} has no grid coverage")]
    UncoveredCurve { index: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by caller input rather than numerics.
    pub fn is_usage_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionTooSmall(_)
                | Error::DimensionMismatch { .. }
                | Error::InvalidParameter(_)
                | Error::UnknownMap(_)
                | Error::Config(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
