//! Reference computations that share no code with the library: a
//! derivative-form energy quadrature, inertia bisection for generalised
//! eigenvalues, and full-line fractional Laplacians.

#![allow(dead_code)]

use regiospec::quadrature::{graded_both_ends, GaussRule};

/// `2 ∫_0^m ∫_M^L (x - y)^{-1-2s} dx dy` with `m = min(a, b)`, `M = max(a, b)`.
///
/// Writing `u(x) - u(y) = ∫_y^x u'` turns the energy on `(0, L)` into
/// `½ ∬ u'(a) v'(b) W(a, b) da db`, whose kernel is only weakly singular.
fn w_kernel(a: f64, b: f64, s: f64, len: f64) -> f64 {
    let (m, big) = if a < b { (a, b) } else { (b, a) };
    if s == 0.0 {
        let phi = |z: f64| if z > 0.0 { z * z.ln() - z } else { 0.0 };
        2.0 * (phi(len) - phi(len - m) - phi(big) + phi(big - m))
    } else {
        let p = 1.0 - 2.0 * s;
        let pw = |z: f64| if z > 0.0 { z.powf(p) } else { 0.0 };
        2.0 / (2.0 * s * p) * (pw(big) - pw(big - m) - pw(len) + pw(len - m))
    }
}

const LEVELS: usize = 30;

/// `∫_{e} ∫_{f} W` over a pair of cells, graded toward every edge so the
/// corner singularities are resolved; equal cells are split along the diagonal.
fn cell_pair(e: (f64, f64), f: (f64, f64), s: f64, len: f64, rule: &GaussRule<f64>) -> f64 {
    if e == f {
        // 2 ∫_{a<b}: b = a + t, t ∈ [0, e1 - a]
        2.0 * graded_both_ends(rule, e.0, e.1, LEVELS, |a| {
            graded_both_ends(rule, 0.0, e.1 - a, LEVELS, |t| w_kernel(a, a + t, s, len))
        })
    } else {
        graded_both_ends(rule, e.0, e.1, LEVELS, |a| {
            graded_both_ends(rule, f.0, f.1, LEVELS, |b| w_kernel(a, b, s, len))
        })
    }
}

/// Dense P1 energy matrix on `(0, len)` with `n` uniform cells.
pub fn energy_matrix_1d(len: f64, n: usize, s: f64) -> Vec<Vec<f64>> {
    let rule = GaussRule::<f64>::legendre(8);
    let h = len / n as f64;
    let cell = |k: usize| (k as f64 * h, (k + 1) as f64 * h);
    let mut pair = vec![vec![0.0; n]; n];
    for e in 0..n {
        for f in e..n {
            let v = cell_pair(cell(e), cell(f), s, len, &rule);
            pair[e][f] = v;
            pair[f][e] = v;
        }
    }
    // slope of hat i on cell k
    let slope = |i: usize, k: usize| -> f64 {
        if k + 1 == i {
            1.0 / h
        } else if k == i {
            -1.0 / h
        } else {
            0.0
        }
    };
    let mut a = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        for j in 0..=n {
            let mut acc = 0.0;
            for e in i.saturating_sub(1)..(i + 1).min(n) {
                for f in j.saturating_sub(1)..(j + 1).min(n) {
                    acc += slope(i, e) * slope(j, f) * pair[e][f];
                }
            }
            a[i][j] = 0.5 * acc;
        }
    }
    a
}

/// P1 mass matrix on `(0, len)`.
pub fn mass_matrix_1d(len: f64, n: usize) -> Vec<Vec<f64>> {
    let h = len / n as f64;
    let mut m = vec![vec![0.0; n + 1]; n + 1];
    for k in 0..n {
        m[k][k] += h / 3.0;
        m[k + 1][k + 1] += h / 3.0;
        m[k][k + 1] += h / 6.0;
        m[k + 1][k] += h / 6.0;
    }
    m
}

/// Number of negative pivots of `A - σ M` (symmetric LDLᵀ, no pivoting),
/// i.e. the count of generalised eigenvalues below `σ`.
fn count_below(a: &[Vec<f64>], m: &[Vec<f64>], sigma: f64) -> usize {
    let n = a.len();
    let mut k: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[i][j] - sigma * m[i][j]).collect()).collect();
    let mut negatives = 0;
    for p in 0..n {
        let mut d = k[p][p];
        if d == 0.0 {
            d = -f64::EPSILON * (1.0 + sigma.abs());
        }
        if d < 0.0 {
            negatives += 1;
        }
        for i in p + 1..n {
            let l = k[i][p] / d;
            if l == 0.0 {
                continue;
            }
            for j in p + 1..n {
                k[i][j] -= l * k[p][j];
            }
        }
    }
    negatives
}

/// Lowest `count` eigenvalues of `A v = λ M v` by bisection on inertia.
pub fn bisection_eigenvalues(a: &[Vec<f64>], m: &[Vec<f64>], count: usize) -> Vec<f64> {
    let scale: f64 = a.iter().flatten().fold(0.0, |acc, v| acc.max(v.abs()));
    let mmin: f64 = m.iter().enumerate().map(|(i, r)| r[i]).fold(f64::INFINITY, f64::min);
    let hi0 = 4.0 * a.len() as f64 * scale / mmin;
    (0..count)
        .map(|k| {
            let (mut lo, mut hi) = (-1e-3 * hi0, hi0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if count_below(a, m, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-15 * hi.abs().max(1.0) {
                    break;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// `D_1 u(x) = -2 ∫_0^1 (u(x) - u(y)) |x-y|^{-1} log|x-y| dy` for
/// `u(y) = y (1 - y)`, in closed form.
pub fn d1_poly2(x: f64) -> f64 {
    // u(x) - u(y) = -(1 - 2x) t + t^2 with t = y - x ∈ [-x, 1-x]
    let (a, b) = (x, 1.0 - x);
    let sgn_log = (b * b.ln() - b) - (a * a.ln() - a);
    let abs_log = (b * b / 2.0 * b.ln() - b * b / 4.0) + (a * a / 2.0 * a.ln() - a * a / 4.0);
    -2.0 * (-(1.0 - 2.0 * x) * sgn_log + abs_log)
}

/// `∫_ℝ (u(x) - u(y)) |x-y|^{-1-2s} dy` for `u` supported in `[lo, hi]`,
/// as `∫_0^∞ (2u(x) - u(x+t) - u(x-t)) t^{-1-2s} dt`.
pub fn full_line_integral(u: impl Fn(f64) -> f64, x: f64, s: f64, lo: f64, hi: f64) -> f64 {
    let rule = GaussRule::<f64>::legendre(12);
    let ux = u(x);
    let g = |t: f64| (2.0 * ux - u(x + t) - u(x - t)) * t.powf(-1.0 - 2.0 * s);
    // beyond `reach` both shifted points have left the support
    let reach = (hi - x).abs().max((x - lo).abs());
    let mut breaks = vec![0.0, (x - lo).abs(), (hi - x).abs(), reach];
    breaks.sort_by(|p, q| p.partial_cmp(q).unwrap());
    breaks.dedup();
    let mut acc = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let panels = 400;
            let step = (w[1] - w[0]) / panels as f64;
            for k in 0..panels {
                let a = w[0] + k as f64 * step;
                // finite grading: below t ~ 1e-11 the second difference is
                // pure rounding noise amplified by t^{-1-2s}
                acc += if k == 0 && w[0] == 0.0 {
                    graded_both_ends(&rule, a, a + step, 16, g)
                } else {
                    rule.integrate(a, a + step, g)
                };
            }
        }
    }
    acc + 2.0 * ux * reach.powf(-2.0 * s) / (2.0 * s)
}
