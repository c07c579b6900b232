//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All algorithms are written against [`Real`], which both `f32` and `f64`
//! implement. Quadrature nodes and special-function coefficients are held as
//! `f64` literals and converted with [`lit`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type usable by the solvers.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Number of significant decimal digits, used to scale default tolerances.
    const DIGITS: u32;
}

impl Real for f32 {
    const DIGITS: u32 = f32::DIGITS;
}

impl Real for f64 {
    const DIGITS: u32 = f64::DIGITS;
}

/// Converts an `f64` literal into `T`.
#[inline(always)]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in target scalar")
}

/// Converts a count or index into `T`.
#[inline(always)]
pub fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("usize representable in target scalar")
}

/// Lossy view of `x` as `f64`, for reporting.
#[inline(always)]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Shortest round-trip text for `x`, switching to exponent form for very
/// large or small magnitudes (as in JSON output).
pub fn format_num<T: Real>(x: T) -> String {
    serde_json::to_string(&x).unwrap_or_else(|_| x.to_string())
}
