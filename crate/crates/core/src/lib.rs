//! Numerics for the regional fractional Laplacian on intervals and
//! rectangles, its logarithmic limit as the order tends to zero, and the
//! associated nonlocal eigenvalue problems.
//!
//! Everything is generic over a [`Real`] scalar (`f32` or `f64`); the `*64`
//! aliases below fix the common double-precision case.

pub mod asymptotics;
pub mod error;
pub mod field;
pub mod galerkin;
pub mod geometry;
pub mod kernels;
pub mod linalg;
pub mod pointwise;
pub mod quadrature;
pub mod scalar;
pub mod special;
pub mod spectrum;

pub use error::{Error, Result};
pub use field::{ScalarField, TestFunction};
pub use galerkin::{FormKind, FormMatrix, Mesh};
pub use geometry::{ConeParams, Domain};
pub use pointwise::{Evaluation, QuadratureSpec};
pub use scalar::Real;
pub use spectrum::SpectralResult;
pub use asymptotics::{BoundReport, SweepResult};

pub type Domain64 = Domain<f64>;
pub type ScalarField64 = ScalarField<f64>;
pub type QuadratureSpec64 = QuadratureSpec<f64>;
pub type Evaluation64 = Evaluation<f64>;
pub type Mesh64 = Mesh<f64>;
pub type FormMatrix64 = FormMatrix<f64>;
pub type SpectralResult64 = SpectralResult<f64>;
pub type SweepResult64 = SweepResult<f64>;
pub type BoundReport64 = BoundReport<f64>;

pub type Domain32 = Domain<f32>;
pub type ScalarField32 = ScalarField<f32>;
pub type Mesh32 = Mesh<f32>;
pub type FormMatrix32 = FormMatrix<f32>;
