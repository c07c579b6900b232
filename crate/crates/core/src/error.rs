use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Variant names are part of the machine-readable CLI payload.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("fractional order {0} is outside the admissible range")]
    InvalidOrder(f64),
    #[error("order {0} exceeds the validated assembly range s <= 0.9")]
    UnsupportedOrder(f64),
    #[error("complement integral diverges at s = 0")]
    DivergentIntegral,
    #[error("point lies outside the domain")]
    PointOutsideDomain,
    #[error("point lies on the domain boundary")]
    PointOnBoundary,
    #[error("kernel evaluated at zero displacement")]
    SingularPoint,
    #[error("order s = {s} is outside the convergence radius alpha/2 = {radius}")]
    OutsideConvergence { s: f64, radius: f64 },
    #[error("principal value ladder failed to converge (last increments {last:e}, {prev:e})")]
    NoConvergence { last: f64, prev: f64 },
    #[error("right-hand side is not mean-zero (mean mass {0:e})")]
    NotMeanZero(f64),
    #[error("system restricted to the mean-zero space is numerically singular")]
    SingularSystem,
    #[error("mass matrix is not symmetric positive definite")]
    MassNotSpd,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector is zero")]
    ZeroVector,
    #[error("vectors are linearly dependent")]
    DependentVectors,
    #[error("grid needs at least {needed} positive orders <= {max_s}, found {found}")]
    InsufficientGrid { needed: usize, found: usize, max_s: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Stable identifier used in JSON error payloads.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidOrder(_) => "InvalidOrder",
            Error::UnsupportedOrder(_) => "UnsupportedOrder",
            Error::DivergentIntegral => "DivergentIntegral",
            Error::PointOutsideDomain => "PointOutsideDomain",
            Error::PointOnBoundary => "PointOnBoundary",
            Error::SingularPoint => "SingularPoint",
            Error::OutsideConvergence { .. } => "OutsideConvergence",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::NotMeanZero(_) => "NotMeanZero",
            Error::SingularSystem => "SingularSystem",
            Error::MassNotSpd => "MassNotSPD",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::ZeroVector => "ZeroVector",
            Error::DependentVectors => "DependentVectors",
            Error::InsufficientGrid { .. } => "InsufficientGrid",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
