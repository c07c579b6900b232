//! Gauss rules and graded composite integration.

use crate::linalg::{tridiagonal_ql, DenseMatrix};
use crate::scalar::{lit, Real};
use crate::special::gamma;

/// A quadrature rule on a reference interval.
#[derive(Debug, Clone)]
pub struct GaussRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussRule<T> {
    /// Gauss-Legendre rule with `n` points on `[-1, 1]`.
    pub fn legendre(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_eval(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_eval(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self {
            nodes: nodes.into_iter().map(lit).collect(),
            weights: weights.into_iter().map(lit).collect(),
        }
    }

    /// Gauss-Jacobi rule for `int_0^1 p^beta g(p) dp`, `beta > -1`, built by
    /// the Golub-Welsch eigenvalue method.
    pub fn jacobi_unit(n: usize, beta: T) -> Self {
        let b = beta.to_f64().expect("finite exponent");
        assert!(b > -1.0, "Jacobi exponent must exceed -1");
        assert!(n >= 1);
        let a = 0.0f64;
        let mut diag = vec![0.0f64; n];
        let mut off = vec![0.0f64; n];
        for (k, dk) in diag.iter_mut().enumerate() {
            let kf = k as f64;
            *dk = if k == 0 {
                (b - a) / (a + b + 2.0)
            } else {
                (b * b - a * a) / ((2.0 * kf + a + b) * (2.0 * kf + a + b + 2.0))
            };
        }
        for (k, ok) in off.iter_mut().enumerate().skip(1) {
            let kf = k as f64;
            let s = 2.0 * kf + a + b;
            let num = 4.0 * kf * (kf + a) * (kf + b) * (kf + a + b);
            let den = s * s * (s + 1.0) * (s - 1.0);
            *ok = (num / den).sqrt();
        }
        let mut rows = DenseMatrix::<f64>::identity(n);
        tridiagonal_ql(&mut diag, &mut off, Some(&mut rows)).expect("Jacobi matrix eigen-solve");
        let mu0 = 2f64.powf(a + b + 1.0) * gamma(a + 1.0) * gamma(b + 1.0) / gamma(a + b + 2.0);
        let scale = 2f64.powf(-b - 1.0);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let v0 = rows[(k, 0)];
                ((1.0 + diag[k]) / 2.0, scale * mu0 * v0 * v0)
            })
            .collect();
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        Self {
            nodes: pairs.iter().map(|p| lit(p.0)).collect(),
            weights: pairs.iter().map(|p| lit(p.1)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[a, b]` with the (Legendre) rule mapped affinely.
    #[inline]
    pub fn integrate(&self, a: T, b: T, mut f: impl FnMut(T) -> T) -> T {
        let half = lit::<T>(0.5);
        let c = (a + b) * half;
        let h = (b - a) * half;
        let mut acc = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + w * f(c + h * x);
        }
        acc * h
    }

    /// Mapped nodes and weights of the (Legendre) rule on `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = lit::<T>(0.5);
        let c = (a + b) * half;
        let h = (b - a) * half;
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (c + h * x, w * h))
    }
    /// The (Legendre) rule transplanted to `[0, 1]`.
    pub fn mapped_unit(&self) -> Self {
        let (nodes, weights) = self.mapped(T::zero(), T::one()).unzip();
        Self { nodes, weights }
    }
}

fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrates `f` over `[a, b]` with `0 < a`, splitting geometrically (ratio 2)
/// from `a` upward so that integrands behaving like powers of `r` near the
/// origin are resolved uniformly.
pub fn graded_from_left<T: Real>(rule: &GaussRule<T>, a: T, b: T, mut f: impl FnMut(T) -> T) -> T {
    if !(b > a) {
        return T::zero();
    }
    let two = lit::<T>(2.0);
    let mut acc = T::zero();
    let mut lo = a;
    while lo < b {
        let hi = (lo * two).min(b);
        acc = acc + rule.integrate(lo, hi, &mut f);
        lo = hi;
    }
    acc
}

/// Integrates `f` over `[a, b]` by recursive bisection, accepting a panel
/// once its value and the sum over its two halves differ by at most
/// `max(abs_tol, rel_tol |value|)`. Returns the integral and the summed
/// panel discrepancies as an error estimate.
pub fn adaptive<T: Real>(
    rule: &GaussRule<T>,
    a: T,
    b: T,
    abs_tol: T,
    rel_tol: T,
    f: &mut impl FnMut(T) -> T,
) -> (T, T) {
    const MAX_DEPTH: usize = 40;
    let half = lit::<T>(0.5);
    let whole = rule.integrate(a, b, &mut *f);
    // explicit stack of (a, b, coarse value, depth)
    let mut stack = vec![(a, b, whole, 0usize)];
    let (mut value, mut err) = (T::zero(), T::zero());
    while let Some((lo, hi, coarse, depth)) = stack.pop() {
        let mid = (lo + hi) * half;
        let left = rule.integrate(lo, mid, &mut *f);
        let right = rule.integrate(mid, hi, &mut *f);
        let fine = left + right;
        let diff = (fine - coarse).abs();
        if diff <= abs_tol.max(rel_tol * fine.abs()) || depth >= MAX_DEPTH || !(mid > lo && hi > mid) {
            value = value + fine;
            err = err + diff;
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    (value, err)
}

/// Integrates over `[a, b]` with geometric refinement toward both ends
/// (`levels` halvings each side), for integrands with endpoint singularities.
pub fn graded_both_ends<T: Real>(
    rule: &GaussRule<T>,
    a: T,
    b: T,
    levels: usize,
    mut f: impl FnMut(T) -> T,
) -> T {
    if !(b > a) {
        return T::zero();
    }
    let half = lit::<T>(0.5);
    let mid = (a + b) * half;
    let mut acc = T::zero();
    // left half: [a, mid] refined toward a
    let mut hi = mid;
    for _ in 0..levels {
        let lo = a + (hi - a) * half;
        acc = acc + rule.integrate(lo, hi, &mut f);
        hi = lo;
    }
    acc = acc + rule.integrate(a, hi, &mut f);
    let mut lo = mid;
    for _ in 0..levels {
        let hi2 = b - (b - lo) * half;
        acc = acc + rule.integrate(lo, hi2, &mut f);
        lo = hi2;
    }
    acc + rule.integrate(lo, b, &mut f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_exact_for_polynomials() {
        let rule = GaussRule::<f64>::legendre(6);
        // degree 11 is integrated exactly
        let v = rule.integrate(0.0, 2.0, |x| x.powi(11));
        assert!((v - 2f64.powi(12) / 12.0).abs() < 1e-10);
        let s: f64 = rule.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn legendre_odd_count_has_center_node() {
        let rule = GaussRule::<f64>::legendre(5);
        assert!(rule.nodes[2].abs() < 1e-15);
        assert!((rule.weights[2] - 128.0 / 225.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_moments() {
        for &beta in &[-0.8f64, -0.5, 0.0, 0.5, 1.0, 1.7] {
            let rule = GaussRule::<f64>::jacobi_unit(6, beta);
            for m in 0..12 {
                let got: f64 =
                    rule.nodes.iter().zip(&rule.weights).map(|(&p, &w)| w * p.powi(m)).sum();
                let want = 1.0 / (m as f64 + beta + 1.0);
                assert!((got - want).abs() < 1e-13 * want.max(1.0), "beta={beta} m={m}");
            }
        }
    }

    #[test]
    fn graded_integrators() {
        let rule = GaussRule::<f64>::legendre(10);
        let v = graded_from_left(&rule, 1e-12, 1.0, |r| 1.0 / r);
        assert!((v - 1e12f64.ln()).abs() < 1e-10);
        let w = graded_both_ends(&rule, 0.0, 1.0, 40, |x| x.sqrt() + (1.0 - x).sqrt());
        assert!((w - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_resolves_sharp_features() {
        let rule = GaussRule::<f64>::legendre(12);
        // narrow Gaussian: a single panel is far off
        let mut f = |x: f64| (-((x - 0.3) / 0.01).powi(2)).exp();
        let want = 0.01 * std::f64::consts::PI.sqrt();
        assert!((rule.integrate(0.0, 1.0, &mut f) - want).abs() > 1e-3);
        let (v, err) = adaptive(&rule, 0.0, 1.0, 1e-13, 1e-13, &mut f);
        assert!((v - want).abs() < 1e-12, "{v} vs {want}");
        assert!(err < 1e-11);
    }
}
