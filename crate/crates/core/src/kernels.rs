//! Normalisation constants, singular kernels and the coefficient bounds of the
//! small-order expansion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, to_f64, Real};
use crate::special::gamma;

fn check_open_order<T: Real>(s: T) -> Result<()> {
    if s > T::zero() && s < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidOrder(to_f64(s)))
    }
}

/// `c_{N,s} = s 4^s Γ((N+2s)/2) / (π^{N/2} Γ(1-s))`.
pub fn c_frac<T: Real>(n: usize, s: T) -> Result<T> {
    check_open_order(s)?;
    let nn = from_usize::<T>(n);
    let half = lit::<T>(0.5);
    Ok(s * lit::<T>(4.0).powf(s) * gamma(nn * half + s)
        / (T::PI().powf(nn * half) * gamma(T::one() - s)))
}

/// The equivalent form `s (1-s) 4^s Γ((N+2s)/2) / (π^{N/2} Γ(2-s))`.
pub fn c_frac_alt<T: Real>(n: usize, s: T) -> Result<T> {
    check_open_order(s)?;
    let nn = from_usize::<T>(n);
    let half = lit::<T>(0.5);
    let two = lit::<T>(2.0);
    Ok(s * (T::one() - s) * lit::<T>(4.0).powf(s) * gamma(nn * half + s)
        / (T::PI().powf(nn * half) * gamma(two - s)))
}

/// `c_N = π^{-N/2} Γ(N/2)`, the slope of `c_{N,s}` at `s = 0`.
pub fn c_log<T: Real>(n: usize) -> T {
    let half = from_usize::<T>(n) * lit(0.5);
    gamma(half) / T::PI().powf(half)
}

/// Surface measure of the unit sphere `S^{N-1}` (2 for N = 1, 2π for N = 2).
pub fn sphere_measure<T: Real>(n: usize) -> T {
    let half = from_usize::<T>(n) * lit(0.5);
    lit::<T>(2.0) * T::PI().powf(half) / gamma(half)
}

/// Hölder and enclosing-radius data entering the expansion bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionBoundParams<T> {
    /// Hölder exponent in (0, 1].
    pub alpha: T,
    /// Radius with Ω ⊂ B_R(x) for every x in Ω.
    pub radius: T,
    /// Hölder seminorm [u]_α.
    pub holder_seminorm: T,
}

impl<T: Real> ExpansionBoundParams<T> {
    pub fn new(alpha: T, radius: T, holder_seminorm: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha <= T::one()) {
            return Err(Error::InvalidInput(format!("Hölder exponent {alpha} not in (0, 1]")));
        }
        if !(radius > T::zero()) || holder_seminorm < T::zero() {
            return Err(Error::InvalidInput("radius must be positive, seminorm nonnegative".into()));
        }
        Ok(Self { alpha, radius, holder_seminorm })
    }

    /// Convergence radius `α/2` of the expansion in `s`.
    pub fn convergence_radius(&self) -> T {
        self.alpha * lit(0.5)
    }
}

/// `c_k = 2^k / α^{k+1} + R^α (2 |log R|)^k / k!`.
pub fn expansion_coeff<T: Real>(p: &ExpansionBoundParams<T>, k: usize) -> T {
    let two = lit::<T>(2.0);
    let geometric = two.powi(k as i32) / p.alpha.powi(k as i32 + 1);
    let l = two * p.radius.ln().abs();
    let mut term = p.radius.powf(p.alpha);
    for i in 1..=k {
        term = term * l / from_usize(i);
    }
    geometric + term
}

/// Tail `d_j(s) = Σ_{k≥j} c_k s^k`, summed in closed form for the geometric
/// part and term by term for the exponential part.
pub fn tail_bound<T: Real>(p: &ExpansionBoundParams<T>, s: T, j: usize) -> Result<T> {
    let radius = p.convergence_radius();
    if !(s >= T::zero()) || s >= radius {
        return Err(Error::OutsideConvergence { s: to_f64(s), radius: to_f64(radius) });
    }
    if s == T::zero() && j >= 1 {
        return Ok(T::zero());
    }
    let q = (s + s) / p.alpha;
    let geometric = q.powi(j as i32) / (p.alpha * (T::one() - q));
    // R^α Σ_{k≥j} x^k / k!  with x = 2 s |log R|
    let x = (s + s) * p.radius.ln().abs();
    let mut term = T::one();
    for i in 1..=j {
        term = term * x / from_usize(i);
    }
    let mut sum = T::zero();
    let mut k = j;
    while term > T::zero() {
        let next = sum + term;
        if next == sum {
            break;
        }
        sum = next;
        k += 1;
        term = term * x / from_usize(k);
    }
    Ok(geometric + p.radius.powf(p.alpha) * sum)
}

/// `|z|^{-N-2s}`.
pub fn riesz_kernel<T: Real>(z: &[T], s: T) -> Result<T> {
    let r = z.iter().fold(T::zero(), |acc, &v| acc.hypot(v));
    if r == T::zero() {
        return Err(Error::SingularPoint);
    }
    Ok(r.powf(-(from_usize::<T>(z.len()) + s + s)))
}

/// `(-1)^k 2^k log^k|z| |z|^{-N}`, the weight of the k-th coefficient operator.
pub fn log_kernel<T: Real>(z: &[T], k: usize) -> Result<T> {
    let r = z.iter().fold(T::zero(), |acc, &v| acc.hypot(v));
    if r == T::zero() {
        return Err(Error::SingularPoint);
    }
    Ok((-lit::<T>(2.0) * r.ln()).powi(k as i32) * r.powi(-(z.len() as i32)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn c_frac_examples() {
        assert!((c_frac(1, 0.5).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!((c_frac(2, 0.5).unwrap() - 0.5 / PI).abs() < 1e-15);
        let s = 1e-6;
        assert!((c_frac(1, s).unwrap() / s - c_log::<f64>(1)).abs() < 1e-4);
        assert!(matches!(c_frac(1, 0.0), Err(Error::InvalidOrder(_))));
        assert!(matches!(c_frac(1, 1.0), Err(Error::InvalidOrder(_))));
    }

    #[test]
    fn c_log_examples() {
        assert!((c_log::<f64>(1) - 1.0).abs() < 1e-15);
        assert!((c_log::<f64>(2) - 1.0 / PI).abs() < 1e-16);
        assert!((c_log::<f64>(4) - 1.0 / (PI * PI)).abs() < 1e-16);
    }

    #[test]
    fn sphere_measures() {
        assert!((sphere_measure::<f64>(1) - 2.0).abs() < 1e-15);
        assert!((sphere_measure::<f64>(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_measure::<f64>(3) - 4.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn expansion_coeff_examples() {
        let p = ExpansionBoundParams::new(1.0, 1.0, 1.0).unwrap();
        assert_eq!(expansion_coeff(&p, 0), 2.0);
        assert_eq!(expansion_coeff(&p, 3), 8.0);
        let q = ExpansionBoundParams::new(0.5, 2.0, 1.0).unwrap();
        let want = 8.0 + 2f64.sqrt() * 2.0 * 2f64.ln();
        assert!((expansion_coeff(&q, 1) - want).abs() < 1e-14);
        assert!((want - 9.960_516).abs() < 1e-6);
    }

    #[test]
    fn tail_bound_examples() {
        let p = ExpansionBoundParams::new(1.0, 1.0, 1.0).unwrap();
        assert!((tail_bound(&p, 0.1f64, 1).unwrap() - 0.25).abs() < 1e-15);
        assert!((tail_bound(&p, 0.45f64, 2).unwrap() - 8.1).abs() < 1e-13);
        assert_eq!(tail_bound(&p, 0.0, 3).unwrap(), 0.0);
        assert!(matches!(tail_bound(&p, 0.5, 1), Err(Error::OutsideConvergence { .. })));
    }

    #[test]
    fn tail_bound_matches_direct_sum() {
        let p = ExpansionBoundParams::new(0.8, 3.0, 1.0).unwrap();
        for j in 1..6 {
            let direct: f64 = (j..400).map(|k| expansion_coeff(&p, k) * 0.2f64.powi(k as i32)).sum();
            let closed = tail_bound(&p, 0.2, j).unwrap();
            assert!(((direct - closed) / closed).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(riesz_kernel(&[1.0], 0.3).unwrap(), 1.0);
        assert_eq!(riesz_kernel(&[0.6, 0.8], 0.7).unwrap(), 1.0);
        assert!((riesz_kernel(&[0.5], 0.25).unwrap() - 2f64.powf(1.5)).abs() < 1e-14);
        assert!((riesz_kernel(&[2.0f64, 0.0], 0.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(riesz_kernel(&[0.0, 0.0], 0.1), Err(Error::SingularPoint));

        assert_eq!(log_kernel(&[1.0], 4).unwrap(), 0.0);
        assert!((log_kernel(&[1.0 / E], 1).unwrap() - 2.0 * E).abs() < 1e-14);
        assert!((log_kernel(&[E], 2).unwrap() - 4.0 / E).abs() < 1e-14);
        assert_eq!(log_kernel(&[0.0], 1), Err(Error::SingularPoint));
    }

    proptest::proptest! {
        #[test]
        fn two_closed_forms_agree(e in -6.0f64..-1e-7, n in 1usize..4) {
            // log grid on (1e-6, 1 - 1e-6), mirrored half the time
            let s = 10f64.powf(e);
            for s in [s, 1.0 - s] {
                let a = c_frac(n, s).unwrap();
                let b = c_frac_alt(n, s).unwrap();
                proptest::prop_assert!(((a - b) / a).abs() < 1e-13);
            }
        }

        #[test]
        fn tail_nonincreasing_in_j(alpha in 0.1f64..1.0, r in 0.2f64..5.0, frac in 0.0f64..0.95) {
            let p = ExpansionBoundParams::new(alpha, r, 1.0).unwrap();
            let s = frac * alpha / 2.0;
            let mut prev = f64::INFINITY;
            for j in 1..600 {
                let t = tail_bound(&p, s, j).unwrap();
                proptest::prop_assert!(t <= prev);
                prev = t;
            }
            proptest::prop_assert!(prev <= 1e-9 * tail_bound(&p, s, 1).unwrap());
        }
    }
}
