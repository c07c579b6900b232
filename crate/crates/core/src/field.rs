//! Scalar fields with attached Hölder data, and the built-in test functions.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::Domain;
use crate::scalar::{lit, Real};

type Eval<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

/// A function on the closed domain together with a Hölder exponent and an
/// upper estimate of its Hölder seminorm.
#[derive(Clone)]
pub struct ScalarField<T> {
    name: String,
    eval: Eval<T>,
    alpha: T,
    holder_seminorm: T,
}

impl<T: Real> ScalarField<T> {
    pub fn new(
        name: impl Into<String>,
        alpha: T,
        holder_seminorm: T,
        f: impl Fn(&[T]) -> T + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), eval: Arc::new(f), alpha, holder_seminorm }
    }

    /// A constant function.
    pub fn constant(c: T) -> Self {
        Self::new("constant", T::one(), T::zero(), move |_| c)
    }

    #[inline]
    pub fn evaluate(&self, x: &[T]) -> T {
        (self.eval)(x)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn holder_seminorm(&self) -> T {
        self.holder_seminorm
    }

    /// `a u + b v`, with Hölder data combined conservatively (valid on sets
    /// of diameter at most one when the exponents differ).
    pub fn linear_combination(a: T, u: &Self, b: T, v: &Self) -> Self {
        let (fu, fv) = (u.eval.clone(), v.eval.clone());
        Self {
            name: format!("{a}*{}+{b}*{}", u.name, v.name),
            eval: Arc::new(move |x| a * fu(x) + b * fv(x)),
            alpha: u.alpha.min(v.alpha),
            holder_seminorm: a.abs() * u.holder_seminorm + b.abs() * v.holder_seminorm,
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for ScalarField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .field("holder_seminorm", &self.holder_seminorm)
            .finish()
    }
}

/// Named functions with trustworthy Lipschitz data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFunction {
    /// `y` (first coordinate).
    Identity,
    /// Smooth bump `exp(-1/(1-r^2))` centred in the domain, radius 0.3 of the shortest side.
    Bump,
    /// `cos(π y)`, tensorised in 2D.
    CosPi,
    /// `y (1 - y)`, summed over coordinates in 2D.
    Poly2,
}

// max_r d/dr exp(-1/(1-r^2)) on [0, 1), rounded up
const BUMP_SLOPE: f64 = 0.7985;

impl TestFunction {
    pub const ALL: [TestFunction; 4] =
        [TestFunction::Identity, TestFunction::Bump, TestFunction::CosPi, TestFunction::Poly2];

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::Identity => "identity",
            TestFunction::Bump => "bump",
            TestFunction::CosPi => "cospi",
            TestFunction::Poly2 => "poly2",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Instantiates the function on `d` with Lipschitz data (α = 1).
    pub fn field<T: Real>(self, d: &Domain<T>) -> ScalarField<T> {
        let one = T::one();
        let pi = T::PI();
        let two = lit::<T>(2.0);
        let name = self.name();
        match self {
            TestFunction::Identity => ScalarField::new(name, one, one, |x: &[T]| x[0]),
            TestFunction::CosPi => {
                let lip = if d.dim() == 1 { pi } else { pi * two.sqrt() };
                ScalarField::new(name, one, lip, |x: &[T]| {
                    x.iter().fold(T::one(), |p, &xi| p * (T::PI() * xi).cos())
                })
            }
            TestFunction::Poly2 => {
                // |∇| = |1 - 2 y| per coordinate, maximised over the box
                let slopes: Vec<T> = d
                    .origin()
                    .iter()
                    .zip(d.extents())
                    .map(|(&lo, e)| (one - two * lo).abs().max((one - two * (lo + e)).abs()))
                    .collect();
                let lip = slopes.iter().fold(T::zero(), |acc, &v| acc.hypot(v));
                ScalarField::new(name, one, lip, |x: &[T]| {
                    x.iter().fold(T::zero(), |acc, &xi| acc + xi * (T::one() - xi))
                })
            }
            TestFunction::Bump => {
                let c = d.center();
                let w = d.extents().into_iter().fold(T::infinity(), T::min) * lit(0.3);
                ScalarField::new(name, one, lit::<T>(BUMP_SLOPE) / w, move |x: &[T]| {
                    let r2 = x
                        .iter()
                        .zip(&c)
                        .fold(T::zero(), |acc, (&xi, &ci)| acc + (xi - ci) * (xi - ci))
                        / (w * w);
                    if r2 < T::one() {
                        (-(T::one() / (T::one() - r2))).exp()
                    } else {
                        T::zero()
                    }
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn registry_round_trip() {
        for f in TestFunction::ALL {
            assert_eq!(TestFunction::from_name(f.name()), Some(f));
        }
        assert_eq!(TestFunction::from_name("nope"), None);
    }

    #[test]
    fn holder_data_is_an_upper_bound() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for d in [
            Domain::<f64>::unit_interval(),
            Domain::interval(-1.0, 2.0).unwrap(),
            Domain::rectangle(0.0, 1.0, 0.0, 1.0).unwrap(),
        ] {
            for tf in TestFunction::ALL {
                let u = tf.field(&d);
                let lo = d.origin();
                let ext = d.extents();
                for _ in 0..20_000 {
                    let x: Vec<f64> = lo.iter().zip(&ext).map(|(&l, &e)| l + e * rng.random::<f64>()).collect();
                    let y: Vec<f64> = lo.iter().zip(&ext).map(|(&l, &e)| l + e * rng.random::<f64>()).collect();
                    let dist = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    let diff = (u.evaluate(&x) - u.evaluate(&y)).abs();
                    assert!(diff <= u.holder_seminorm() * dist.powf(u.alpha()) * (1.0 + 1e-12) + 1e-15,
                        "{} on {:?}", tf.name(), d);
                }
            }
        }
    }

    #[test]
    fn bump_is_supported_inside() {
        let d = Domain::<f64>::unit_interval();
        let b = TestFunction::Bump.field(&d);
        assert_eq!(b.evaluate(&[0.19]), 0.0);
        assert_eq!(b.evaluate(&[0.81]), 0.0);
        assert!((b.evaluate(&[0.5]) - (-1.0f64).exp()).abs() < 1e-15);
    }
}
