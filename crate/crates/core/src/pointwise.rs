//! Pointwise evaluation of the regional operators by principal-value
//! quadrature.
//!
//! Every integral over Ω is written in polar form around `x` and the two
//! opposite rays `x ± rω` are paired, so the second difference
//! `2u(x) - u(x+rω) - u(x-rω)` absorbs the singularity. The exclusion radii of
//! the P.V. limit form a dyadic ladder; the ladder partial sums are
//! extrapolated to zero radius with Aitken's Δ² process.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::Domain;
use crate::kernels::{c_frac, c_log};
use crate::quadrature::{adaptive, GaussRule};
use crate::scalar::{from_usize, lit, to_f64, Real};

/// Controls the principal-value quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec<T> {
    /// Strictly decreasing exclusion radii `ε_0 > ε_1 > ... > 0`, scaled down
    /// uniformly at points closer to the boundary than `ε_0`.
    pub epsilon_ladder: Vec<T>,
    /// Geometric refinement levels toward angular kinks (2D only).
    pub graded_levels: usize,
    pub abs_tol: T,
    pub rel_tol: T,
}

impl<T: Real> QuadratureSpec<T> {
    /// `ε_m = eps0 · 2^{-m}` for `m = 0..=levels`.
    pub fn dyadic(eps0: T, levels: usize) -> Self {
        let half = lit::<T>(0.5);
        let mut ladder = Vec::with_capacity(levels + 1);
        let mut e = eps0;
        for _ in 0..=levels {
            ladder.push(e);
            e = e * half;
        }
        Self { epsilon_ladder: ladder, graded_levels: 4, abs_tol: lit(1e-8), rel_tol: lit(1e-8) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon_ladder.len() < 4 {
            return Err(Error::InvalidInput("epsilon ladder needs at least 4 radii".into()));
        }
        if self.epsilon_ladder.last().is_some_and(|&e| !(e > T::zero()))
            || self.epsilon_ladder.windows(2).any(|w| !(w[1] < w[0]))
        {
            return Err(Error::InvalidInput("epsilon ladder must be positive and strictly decreasing".into()));
        }
        if !(self.abs_tol > T::zero() && self.rel_tol > T::zero()) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        Ok(())
    }
}

impl<T: Real> Default for QuadratureSpec<T> {
    fn default() -> Self {
        // ε_min ≈ 2.4e-7: deeper radii lose more to cancellation in the
        // second difference than they gain in truncation.
        Self::dyadic(lit(0.25), 20)
    }
}

/// A value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation<T> {
    pub value: T,
    #[serde(rename = "errEstimate")]
    pub err_estimate: T,
}

impl<T: Real> Evaluation<T> {
    fn scaled(self, c: T) -> Self {
        Self { value: self.value * c, err_estimate: self.err_estimate * c.abs() }
    }
}

const GAUSS_POINTS: usize = 12;

fn check_point<T: Real>(d: &Domain<T>, x: &[T]) -> Result<()> {
    if x.len() != d.dim() {
        return Err(Error::DimensionMismatch { expected: d.dim(), got: x.len() });
    }
    if d.contains(x) {
        Ok(())
    } else if d.contains_closed(x) {
        Err(Error::PointOnBoundary)
    } else {
        Err(Error::PointOutsideDomain)
    }
}

/// Largest number of angular refinements (each halves every angular panel).
const MAX_ANGULAR_REFINEMENTS: usize = 6;

/// `P.V. ∫_Ω (u(x) - u(y)) w(|x-y|) |x-y|^{1-N} dy`, where `radial(r)` is the
/// kernel already multiplied by the polar Jacobian `r^{N-1}`.
///
/// Paired rays `±ω` are integrated radially shell by shell down the
/// ε-ladder (adaptively, so compactly supported or sharply varying
/// integrands are resolved), and the cut-off sums are extrapolated to
/// `ε → 0`. In 2D the angular rule is refined until the limit stabilises.
pub fn principal_value<T: Real>(
    u: &ScalarField<T>,
    d: &Domain<T>,
    x: &[T],
    q: &QuadratureSpec<T>,
    radial: impl Fn(T) -> T,
) -> Result<Evaluation<T>> {
    check_point(d, x)?;
    q.validate()?;
    let rule = GaussRule::<T>::legendre(GAUSS_POINTS);
    // shrink the ladder near the boundary so every extrapolated shell is a
    // full annulus, where the paired integrand cancels to leading order
    let shrink = (d.boundary_distance(x) / q.epsilon_ladder[0]).min(T::one());
    let ladder: Vec<T> = q.epsilon_ladder.iter().map(|&e| e * shrink).collect();
    let levels = ladder.len();
    let ux = u.evaluate(x);
    let panel_abs = q.abs_tol * lit(1e-3);
    let panel_rel = q.rel_tol * lit(1e-3);

    // shells[0] = ∫_{r > ε_0}, shells[m] = ∫_{ε_m < r < ε_{m-1}};
    // returns the shells, a magnitude scale and the radial quadrature error
    let ladder_sums = |directions: &[(Vec<T>, T)]| -> (Vec<T>, T, T) {
        let mut shells = vec![T::zero(); levels];
        let mut magnitude = T::zero();
        let mut quad_err = T::zero();
        for (dir, weight) in directions {
            let weight = *weight;
            let neg: Vec<T> = dir.iter().map(|&c| -c).collect();
            let rho_p = d.exit_distance(x, dir);
            let rho_m = d.exit_distance(x, &neg);
            let mut yp = x.to_vec();
            let mut ym = x.to_vec();
            let mut g = |r: T| {
                let mut acc = T::zero();
                if r < rho_p {
                    for (k, y) in yp.iter_mut().enumerate() {
                        *y = x[k] + r * dir[k];
                    }
                    acc = acc + (ux - u.evaluate(&yp));
                }
                if r < rho_m {
                    for (k, y) in ym.iter_mut().enumerate() {
                        *y = x[k] - r * dir[k];
                    }
                    acc = acc + (ux - u.evaluate(&ym));
                }
                acc * radial(r)
            };
            let (lo_rho, hi_rho) = (rho_p.min(rho_m), rho_p.max(rho_m));
            let two = lit::<T>(2.0);
            // dyadic panels from `a`, split where one of the rays leaves the domain
            let mut piece = |a: T, b: T| -> (T, T) {
                let b = b.min(hi_rho);
                let (mut acc, mut err) = (T::zero(), T::zero());
                let mut lo = a;
                while lo < b {
                    let mut hi = (lo * two).min(b);
                    if lo_rho > lo && lo_rho < hi {
                        hi = lo_rho;
                    }
                    let (v, e) = adaptive(&rule, lo, hi, panel_abs, panel_rel, &mut g);
                    acc = acc + v;
                    err = err + e;
                    lo = hi;
                }
                (acc, err)
            };
            let (outer, e0) = piece(ladder[0], hi_rho);
            shells[0] = shells[0] + weight * outer;
            magnitude = magnitude + (weight * outer).abs();
            quad_err = quad_err + weight.abs() * e0;
            for m in 1..levels {
                let (v, e) = piece(ladder[m], ladder[m - 1]);
                shells[m] = shells[m] + weight * v;
                quad_err = quad_err + weight.abs() * e;
            }
        }
        for s in &shells {
            magnitude = magnitude + s.abs();
        }
        (shells, magnitude, quad_err)
    };

    if d.dim() == 1 {
        let (shells, magnitude, quad_err) = ladder_sums(&[(vec![T::one()], T::one())]);
        return extrapolate_ladder(&shells, magnitude, quad_err, q);
    }

    // θ in [0, π), split where either ray passes a corner
    let pi = T::PI();
    let mut cuts: Vec<T> =
        d.corner_angles(x).into_iter().map(|t| if t >= pi { t - pi } else { t }).collect();
    cuts.push(T::zero());
    cuts.push(pi);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < lit(1e-14));
    let mut previous: Option<Evaluation<T>> = None;
    let mut last_diff = T::infinity();
    for refinement in 0..=MAX_ANGULAR_REFINEMENTS {
        let parts = 1usize << refinement;
        let mut nodes = Vec::new();
        for w in cuts.windows(2) {
            let step = (w[1] - w[0]) / from_usize(parts);
            for p in 0..parts {
                let a = w[0] + step * from_usize(p);
                graded_nodes(&rule, a, a + step, q.graded_levels, &mut nodes);
            }
        }
        let directions: Vec<(Vec<T>, T)> =
            nodes.iter().map(|&(theta, wt)| (vec![theta.cos(), theta.sin()], wt)).collect();
        let (shells, magnitude, quad_err) = ladder_sums(&directions);
        let current = match extrapolate_ladder(&shells, magnitude, quad_err, q) {
            Ok(ev) => ev,
            // a coarse angular rule may leave the ladder too rough to extrapolate
            Err(_) if refinement < MAX_ANGULAR_REFINEMENTS => {
                previous = None;
                continue;
            }
            Err(e) => return Err(e),
        };
        if let Some(prev) = previous {
            let diff = (current.value - prev.value).abs();
            let tol = q.abs_tol.max(q.rel_tol * current.value.abs());
            if diff <= tol {
                return Ok(Evaluation { value: current.value, err_estimate: current.err_estimate + diff });
            }
            last_diff = diff;
        }
        previous = Some(current);
    }
    let last = previous.map_or(T::nan(), |p| p.value);
    Err(Error::NoConvergence { last: to_f64(last), prev: to_f64(last_diff) })
}

/// Nodes and weights of [`graded_both_ends`] on `[a, b]`.
fn graded_nodes<T: Real>(rule: &GaussRule<T>, a: T, b: T, levels: usize, out: &mut Vec<(T, T)>) {
    let half = lit::<T>(0.5);
    let mid = (a + b) * half;
    let mut hi = mid;
    for _ in 0..levels {
        let lo = a + (hi - a) * half;
        out.extend(rule.mapped(lo, hi));
        hi = lo;
    }
    out.extend(rule.mapped(a, hi));
    let mut lo = mid;
    for _ in 0..levels {
        let hi2 = b - (b - lo) * half;
        out.extend(rule.mapped(lo, hi2));
        lo = hi2;
    }
    out.extend(rule.mapped(lo, b));
}

/// Limit of the ladder partial sums `I_m = Σ_{k≤m} shells[k]` by Wynn's
/// ε-algorithm. Even columns of the table are Shanks transforms, exact for
/// sums of (polynomially modulated) geometric sequences, which is the form
/// `I_m` takes for smooth integrands against power and power-log kernels.
/// Among the even columns the one whose last three entries agree best is
/// used; the spread of those entries is the error estimate.
fn extrapolate_ladder<T: Real>(
    shells: &[T],
    magnitude: T,
    quad_err: T,
    q: &QuadratureSpec<T>,
) -> Result<Evaluation<T>> {
    let n = shells.len();
    let partial: Vec<T> = shells
        .iter()
        .scan(T::zero(), |acc, &s| {
            *acc = *acc + s;
            Some(*acc)
        })
        .collect();
    let noise = magnitude * T::epsilon() * lit(64.0);
    let tail = shells[n - 1].abs().max(shells[n - 2].abs());
    let (value, spread) = if tail <= noise {
        // ladder already converged to rounding level
        (partial[n - 1], tail)
    } else {
        wynn_epsilon(&partial)
    };
    let err = spread + noise + quad_err;
    let tol = q.abs_tol.max(q.rel_tol * value.abs());
    if !value.is_finite() || err > tol {
        return Err(Error::NoConvergence { last: to_f64(shells[n - 1]), prev: to_f64(shells[n - 2]) });
    }
    Ok(Evaluation { value, err_estimate: err })
}

const WYNN_MAX_COLUMN: usize = 12;

/// Best even-column estimate of the limit of `seq` and its spread.
fn wynn_epsilon<T: Real>(seq: &[T]) -> (T, T) {
    let n = seq.len();
    let last = |col: &[T]| col.last().copied().unwrap_or(T::nan());
    let spread_of = |col: &[T]| -> T {
        let k = col.len();
        if k < 3 {
            return T::infinity();
        }
        let (a, b, c) = (col[k - 1], col[k - 2], col[k - 3]);
        let spread = (a - b).abs().max((b - c).abs());
        if spread.is_nan() {
            T::infinity()
        } else {
            spread
        }
    };
    let mut best = (last(seq), spread_of(seq));
    let mut prev: Vec<T> = vec![T::zero(); n + 1];
    let mut cur: Vec<T> = seq.to_vec();
    for column in 1..=WYNN_MAX_COLUMN.min(n.saturating_sub(1)) {
        let next: Vec<T> = (0..cur.len() - 1)
            .map(|j| {
                let diff = cur[j + 1] - cur[j];
                if diff == T::zero() {
                    T::nan()
                } else {
                    prev[j + 1] + T::one() / diff
                }
            })
            .collect();
        if column % 2 == 0 {
            // only a trailing run of finite entries is meaningful
            let start = next.iter().rposition(|v| !v.is_finite()).map_or(0, |i| i + 1);
            let col = &next[start..];
            let spread = spread_of(col);
            if spread < best.1 {
                best = (last(col), spread);
            }
        }
        prev = cur;
        cur = next;
        if cur.len() < 2 {
            break;
        }
    }
    best
}

fn check_order<T: Real>(s: T) -> Result<()> {
    if s >= T::zero() && s < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidOrder(to_f64(s)))
    }
}

/// `D^s_Ω u(x) = P.V. ∫_Ω (u(x) - u(y)) |x - y|^{-N-2s} dy`, `s ∈ [0, 1)`.
pub fn eval_ds<T: Real>(
    u: &ScalarField<T>,
    d: &Domain<T>,
    x: &[T],
    s: T,
    q: &QuadratureSpec<T>,
) -> Result<Evaluation<T>> {
    check_order(s)?;
    let p = -(T::one() + s + s);
    principal_value(u, d, x, q, |r| r.powf(p))
}

/// `D_k u(x) = (-1)^k 2^k ∫_Ω (u(x) - u(y)) |x-y|^{-N} log^k|x-y| dy`.
pub fn eval_dk<T: Real>(
    u: &ScalarField<T>,
    d: &Domain<T>,
    x: &[T],
    k: usize,
    q: &QuadratureSpec<T>,
) -> Result<Evaluation<T>> {
    if k == 0 {
        return Err(Error::InvalidInput("coefficient index k must be positive".into()));
    }
    let m2 = lit::<T>(-2.0);
    principal_value(u, d, x, q, |r| (m2 * r.ln()).powi(k as i32) / r)
}

/// Regional logarithmic Laplacian `c_N D^0_Ω u(x)`.
pub fn eval_llog<T: Real>(
    u: &ScalarField<T>,
    d: &Domain<T>,
    x: &[T],
    q: &QuadratureSpec<T>,
) -> Result<Evaluation<T>> {
    Ok(eval_ds(u, d, x, T::zero(), q)?.scaled(c_log(d.dim())))
}

/// Killing measure `κ_{Ω,s}(x) = c_{N,s} ∫_{R^N \ Ω} |x - y|^{-N-2s} dy`.
pub fn eval_kappa<T: Real>(d: &Domain<T>, x: &[T], s: T) -> Result<T> {
    if s == T::zero() {
        return Err(Error::DivergentIntegral);
    }
    let c = c_frac(d.dim(), s)?;
    Ok(c * d.complement_tail(x, s)?)
}

/// Regional fractional Laplacian `c_{N,s} D^s_Ω u(x)`, `s ∈ (0, 1)`.
pub fn eval_regional_fraclap<T: Real>(
    u: &ScalarField<T>,
    d: &Domain<T>,
    x: &[T],
    s: T,
    q: &QuadratureSpec<T>,
) -> Result<Evaluation<T>> {
    let c = c_frac(d.dim(), s)?;
    Ok(eval_ds(u, d, x, s, q)?.scaled(c))
}

/// Partial sum `D^0 u(x) + Σ_{k=1}^{j-1} s^k D_k u(x) / k!` of the expansion
/// of `D^s_Ω u(x)` in powers of `s`, valid for `s < α/2`.
pub fn series_partial<T: Real>(
    u: &ScalarField<T>,
    d: &Domain<T>,
    x: &[T],
    s: T,
    j: usize,
    q: &QuadratureSpec<T>,
) -> Result<Evaluation<T>> {
    let radius = u.alpha() * lit(0.5);
    if !(s >= T::zero()) || s >= radius {
        return Err(Error::OutsideConvergence { s: to_f64(s), radius: to_f64(radius) });
    }
    if j == 0 {
        return Err(Error::InvalidInput("series length j must be at least 1".into()));
    }
    let mut total = eval_ds(u, d, x, T::zero(), q)?;
    let mut factor = T::one();
    for k in 1..j {
        factor = factor * s / from_usize(k);
        if factor == T::zero() {
            break;
        }
        let dk = eval_dk(u, d, x, k, q)?;
        total.value = total.value + factor * dk.value;
        total.err_estimate = total.err_estimate + factor * dk.err_estimate;
    }
    Ok(total)
}
