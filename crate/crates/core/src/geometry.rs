//! Bounded domains: intervals and axis-aligned rectangles.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::quadrature::{graded_both_ends, GaussRule};
use crate::scalar::{lit, Real};

/// A bounded open Lipschitz set in one or two dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain<T> {
    Interval { a: T, b: T },
    Rectangle { a1: T, b1: T, a2: T, b2: T },
}

/// Uniform cone constants: every point of the closure admits a cone of
/// length `delta0` inside the domain whose cross-section has surface
/// measure `c0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeParams<T> {
    pub c0: T,
    pub delta0: T,
}

impl<T: Real> Domain<T> {
    pub fn interval(a: T, b: T) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidInput(format!("interval requires a < b, got ({a}, {b})")));
        }
        Ok(Domain::Interval { a, b })
    }

    pub fn rectangle(a1: T, b1: T, a2: T, b2: T) -> Result<Self> {
        if !(a1 < b1 && a2 < b2) || ![a1, b1, a2, b2].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("rectangle requires a1 < b1 and a2 < b2".into()));
        }
        Ok(Domain::Rectangle { a1, b1, a2, b2 })
    }

    /// The unit interval (0, 1).
    pub fn unit_interval() -> Self {
        Domain::Interval { a: T::zero(), b: T::one() }
    }

    /// Parses `"a,b"` or `"a1,b1,a2,b2"`.
    pub fn parse(text: &str) -> Result<Self> {
        let vals: Vec<f64> = text
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidInput(format!("bad domain '{text}': {e}")))?;
        match vals.as_slice() {
            [a, b] => Self::interval(lit(*a), lit(*b)),
            [a1, b1, a2, b2] => Self::rectangle(lit(*a1), lit(*b1), lit(*a2), lit(*b2)),
            _ => Err(Error::InvalidInput(format!("domain needs 2 or 4 numbers, got '{text}'"))),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Rectangle { .. } => 2,
        }
    }

    /// Side lengths along each axis.
    pub fn extents(&self) -> Vec<T> {
        match *self {
            Domain::Interval { a, b } => vec![b - a],
            Domain::Rectangle { a1, b1, a2, b2 } => vec![b1 - a1, b2 - a2],
        }
    }

    /// Lower corner.
    pub fn origin(&self) -> Vec<T> {
        match *self {
            Domain::Interval { a, .. } => vec![a],
            Domain::Rectangle { a1, a2, .. } => vec![a1, a2],
        }
    }

    /// Lebesgue measure |Ω|.
    pub fn measure(&self) -> T {
        self.extents().into_iter().fold(T::one(), |p, e| p * e)
    }

    /// sup |x - y| over the domain.
    pub fn diameter(&self) -> T {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::Rectangle { a1, b1, a2, b2 } => (b1 - a1).hypot(b2 - a2),
        }
    }

    pub fn center(&self) -> Vec<T> {
        let half = lit::<T>(0.5);
        match *self {
            Domain::Interval { a, b } => vec![(a + b) * half],
            Domain::Rectangle { a1, b1, a2, b2 } => vec![(a1 + b1) * half, (a2 + b2) * half],
        }
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// Membership in the open set.
    pub fn contains(&self, x: &[T]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match *self {
            Domain::Interval { a, b } => a < x[0] && x[0] < b,
            Domain::Rectangle { a1, b1, a2, b2 } => {
                a1 < x[0] && x[0] < b1 && a2 < x[1] && x[1] < b2
            }
        }
    }

    /// Membership in the closure.
    pub fn contains_closed(&self, x: &[T]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match *self {
            Domain::Interval { a, b } => a <= x[0] && x[0] <= b,
            Domain::Rectangle { a1, b1, a2, b2 } => {
                a1 <= x[0] && x[0] <= b1 && a2 <= x[1] && x[1] <= b2
            }
        }
    }

    /// Distance from a point of the closure to the boundary.
    pub fn boundary_distance(&self, x: &[T]) -> T {
        match *self {
            Domain::Interval { a, b } => (x[0] - a).min(b - x[0]),
            Domain::Rectangle { a1, b1, a2, b2 } => {
                (x[0] - a1).min(b1 - x[0]).min(x[1] - a2).min(b2 - x[1])
            }
        }
    }

    /// Distance from `x` (in the closure) to the boundary along unit direction
    /// `dir`. For intervals `dir` is `[+1]` or `[-1]`.
    pub fn exit_distance(&self, x: &[T], dir: &[T]) -> T {
        let axis = |xi: T, di: T, lo: T, hi: T| {
            if di > T::zero() {
                (hi - xi) / di
            } else if di < T::zero() {
                (lo - xi) / di
            } else {
                T::infinity()
            }
        };
        match *self {
            Domain::Interval { a, b } => axis(x[0], dir[0], a, b),
            Domain::Rectangle { a1, b1, a2, b2 } => {
                axis(x[0], dir[0], a1, b1).min(axis(x[1], dir[1], a2, b2))
            }
        }
    }

    /// Polar angles in `[0, 2π)` of the rectangle corners seen from `x`,
    /// sorted. Empty for intervals.
    pub fn corner_angles(&self, x: &[T]) -> Vec<T> {
        match *self {
            Domain::Interval { .. } => Vec::new(),
            Domain::Rectangle { a1, b1, a2, b2 } => {
                let two_pi = T::PI() + T::PI();
                let mut out: Vec<T> = [(b1, b2), (a1, b2), (a1, a2), (b1, a2)]
                    .iter()
                    .map(|&(cx, cy)| {
                        let t = (cy - x[1]).atan2(cx - x[0]);
                        if t < T::zero() {
                            t + two_pi
                        } else {
                            t
                        }
                    })
                    .collect();
                out.sort_by(|p, q| p.partial_cmp(q).unwrap());
                out
            }
        }
    }

    /// Cone constants `(C0, δ0)` for the shape.
    ///
    /// Intervals use the half-line toward the farther endpoint (C0 = 1);
    /// rectangles use the right-angle quadrant toward the farther corner
    /// (C0 = π/2). `δ0` is half the shortest side, clamped below 1.
    pub fn cone_params(&self) -> ConeParams<T> {
        let cap = T::one() - lit::<T>(4.0) * T::epsilon();
        let half = lit::<T>(0.5);
        match *self {
            Domain::Interval { a, b } => ConeParams { c0: T::one(), delta0: ((b - a) * half).min(cap) },
            Domain::Rectangle { a1, b1, a2, b2 } => ConeParams {
                c0: T::FRAC_PI_2(),
                delta0: ((b1 - a1).min(b2 - a2) * half).min(cap),
            },
        }
    }

    /// `∫_{R^N \ Ω} |x - y|^{-N-2s} dy` for `x` in the open domain.
    ///
    /// Closed form on intervals. On rectangles the radial integral is done
    /// analytically and the angular one by quadrature split at the corners.
    pub fn complement_tail(&self, x: &[T], s: T) -> Result<T> {
        self.check_dim(x)?;
        if !(s >= T::zero() && s < T::one()) {
            return Err(Error::InvalidOrder(s.to_f64().unwrap_or(f64::NAN)));
        }
        if s == T::zero() {
            return Err(Error::DivergentIntegral);
        }
        if !self.contains(x) {
            return Err(Error::PointOutsideDomain);
        }
        let two_s = s + s;
        match *self {
            Domain::Interval { a, b } => Ok(((x[0] - a).powf(-two_s) + (b - x[0]).powf(-two_s)) / two_s),
            Domain::Rectangle { .. } => {
                let rule = GaussRule::legendre(16);
                let mut cuts = self.corner_angles(x);
                let two_pi = T::PI() + T::PI();
                cuts.push(cuts[0] + two_pi);
                let mut total = T::zero();
                for w in cuts.windows(2) {
                    total = total
                        + graded_both_ends(&rule, w[0], w[1], 6, |theta| {
                            let dir = [theta.cos(), theta.sin()];
                            self.exit_distance(x, &dir).powf(-two_s)
                        });
                }
                Ok(total / two_s)
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DomainRepr<T> {
    dim: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    interval: Option<[T; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    rect: Option<[T; 4]>,
}

impl<T: Real> Serialize for Domain<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match *self {
            Domain::Interval { a, b } => DomainRepr { dim: 1, interval: Some([a, b]), rect: None },
            Domain::Rectangle { a1, b1, a2, b2 } => {
                DomainRepr { dim: 2, interval: None, rect: Some([a1, b1, a2, b2]) }
            }
        };
        repr.serialize(serializer)
    }
}

impl<'de, T: Real> Deserialize<'de> for Domain<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = DomainRepr::<T>::deserialize(deserializer)?;
        let dom = match (repr.dim, repr.interval, repr.rect) {
            (1, Some([a, b]), None) => Domain::interval(a, b),
            (2, None, Some([a1, b1, a2, b2])) => Domain::rectangle(a1, b1, a2, b2),
            _ => Err(Error::InvalidInput("expected {dim:1, interval} or {dim:2, rect}".into())),
        };
        dom.map_err(D::Error::custom)
    }
}
