//! Sweeps in the order `s` and the checks built on them: convergence of the
//! spectrum as `s → 0`, the derivative of the rescaled eigenvalues at zero,
//! uniform sup-norm bounds, the cone lower bound, equicontinuity and the
//! Poincaré inequality.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galerkin::{assemble_es, assemble_mass, build_mesh, FormMatrix, Mesh, MeshInfo};
use crate::geometry::{ConeParams, Domain};
use crate::kernels::{c_frac, c_log};
use crate::linalg::dot;
use crate::quadrature::GaussRule;
use crate::scalar::{format_num, from_usize, lit, to_f64, Real};
use crate::spectrum::{principal_angles, rayleigh, solve_eigs, SpectralChecks, SpectralResult};

/// Relative gap below which eigenvalues are treated as one cluster.
pub const CLUSTER_TOL: f64 = 1e-8;

/// Spectra on one mesh across a grid of orders.
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct SweepResult<T> {
    /// Decreasing orders, ending with 0.
    #[serde(rename = "sGrid")]
    pub s_grid: Vec<T>,
    #[serde(rename = "nMax")]
    pub n_max: usize,
    pub mesh: MeshInfo<T>,
    #[serde(rename = "perS")]
    pub per_s: Vec<SpectralResult<T>>,
    /// `mu[i][n]`: `c_frac(N, s_i) λ_{n,s_i}`, or `c_log(N) λ_{n,0}` at `s = 0`.
    pub mu: Vec<Vec<T>>,
    pub checks: Vec<SpectralChecks<T>>,
    #[serde(skip)]
    pub mass: FormMatrix<T>,
    #[serde(skip)]
    pub nodes: Vec<Vec<T>>,
}

impl<T: Real> SweepResult<T> {
    /// Position of `s = 0` in the grid.
    pub fn zero_index(&self) -> usize {
        self.s_grid.len() - 1
    }

    pub fn lambda(&self, i: usize, n: usize) -> T {
        self.per_s[i].eigenvalues[n]
    }

    /// One row per `(n, s)`: `n,s,lambda,mu`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,s,lambda,mu\n");
        for n in 0..=self.n_max {
            for (i, s) in self.s_grid.iter().enumerate() {
                out.push_str(&format!("{n},{},{},{}\n", format_num(*s), format_num(self.lambda(i, n)), format_num(self.mu[i][n])));
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("sweep serialises")
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n > self.n_max {
            return Err(Error::InvalidInput(format!("eigenvalue index {n} exceeds nMax {}", self.n_max)));
        }
        Ok(())
    }
}

/// Sorts the grid decreasingly and removes duplicates; requires `0`.
pub fn normalize_grid<T: Real>(grid: &[T]) -> Result<Vec<T>> {
    let mut g = grid.to_vec();
    if let Some(bad) = g.iter().find(|&&s| !(s >= T::zero()) || s >= T::one()) {
        return Err(Error::InvalidOrder(to_f64(*bad)));
    }
    g.sort_by(|a, b| b.partial_cmp(a).unwrap());
    g.dedup();
    if g.last() != Some(&T::zero()) {
        return Err(Error::InvalidInput("the s-grid must contain 0".into()));
    }
    Ok(g)
}

/// Assembles and solves the eigenproblem for every order on a shared mesh
/// with `cells` cells per dimension, keeping eigenpairs `0..=n_max`.
pub fn s_sweep<T: Real>(d: &Domain<T>, cells: usize, s_grid: &[T], n_max: usize) -> Result<SweepResult<T>> {
    let grid = normalize_grid(s_grid)?;
    let mesh = build_mesh(d, cells)?;
    if n_max + 1 > mesh.node_count() {
        return Err(Error::DimensionMismatch { expected: mesh.node_count(), got: n_max + 1 });
    }
    let mass = assemble_mass(&mesh);
    let solved: Vec<Result<(SpectralResult<T>, SpectralChecks<T>)>> = grid
        .par_iter()
        .map(|&s| {
            let a = assemble_es(&mesh, s)?;
            let r = solve_eigs(&a, &mass, n_max + 1)?.with_mesh(mesh.info());
            let c = r.checks(&a, &mass);
            Ok((r, c))
        })
        .collect();
    let mut per_s = Vec::with_capacity(grid.len());
    let mut checks = Vec::with_capacity(grid.len());
    for r in solved {
        let (r, c) = r?;
        per_s.push(r);
        checks.push(c);
    }
    let dim = d.dim();
    let mu = grid
        .iter()
        .zip(&per_s)
        .map(|(&s, r)| {
            let c = if s == T::zero() { Ok(c_log(dim)) } else { c_frac(dim, s) }?;
            Ok(r.eigenvalues.iter().map(|&l| c * l).collect())
        })
        .collect::<Result<Vec<Vec<T>>>>()?;
    Ok(SweepResult {
        s_grid: grid,
        n_max,
        mesh: mesh.info(),
        per_s,
        mu,
        checks,
        mass,
        nodes: mesh.nodes().to_vec(),
    })
}

/// Value at `s = 0` of the polynomial interpolating `(s_i, f_i)` (Neville).
pub fn extrapolate_to_zero<T: Real>(s: &[T], f: &[T]) -> T {
    let mut p = f.to_vec();
    let n = s.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (s[i + k] * p[i] - s[i] * p[i + 1]) / (s[i + k] - s[i]);
        }
    }
    p[0]
}

/// Richardson estimate of `μ'(0) = lim μ(s)/s` from samples of `μ` at
/// positive orders.
pub fn extrapolate_derivative<T: Real>(s: &[T], mu: &[T]) -> T {
    let q: Vec<T> = s.iter().zip(mu).map(|(&s, &m)| m / s).collect();
    extrapolate_to_zero(s, &q)
}

/// Derivative of `μ_{n,s}` at `s = 0` compared with `μ_{n,0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport<T> {
    pub n: usize,
    #[serde(rename = "sUsed")]
    pub s_used: Vec<T>,
    pub estimate: T,
    #[serde(rename = "mu0")]
    pub mu_zero: T,
    /// `|estimate - μ_{n,0}| / |μ_{n,0}|` (absolute when `μ_{n,0} = 0`).
    pub deviation: T,
}

/// Largest order used by [`derivative_at_zero`].
pub const DERIVATIVE_MAX_S: f64 = 0.1;

/// Richardson limit of `μ_{n,s}/s` over the three smallest positive orders
/// not exceeding 0.1.
pub fn derivative_at_zero<T: Real>(sw: &SweepResult<T>, n: usize) -> Result<DerivativeReport<T>> {
    sw.check_index(n)?;
    let mut picks: Vec<usize> = (0..sw.s_grid.len())
        .filter(|&i| sw.s_grid[i] > T::zero() && sw.s_grid[i] <= lit(DERIVATIVE_MAX_S))
        .collect();
    if picks.len() < 3 {
        return Err(Error::InsufficientGrid { needed: 3, found: picks.len(), max_s: DERIVATIVE_MAX_S });
    }
    picks.sort_by(|&a, &b| sw.s_grid[a].partial_cmp(&sw.s_grid[b]).unwrap());
    picks.truncate(3);
    let s: Vec<T> = picks.iter().map(|&i| sw.s_grid[i]).collect();
    let mu: Vec<T> = picks.iter().map(|&i| sw.mu[i][n]).collect();
    let estimate = if n == 0 { T::zero() } else { extrapolate_derivative(&s, &mu) };
    let mu_zero = sw.mu[sw.zero_index()][n];
    let err = (estimate - mu_zero).abs();
    let deviation = if mu_zero.abs() > lit(1e-9) { err / mu_zero.abs() } else { err };
    Ok(DerivativeReport { n, s_used: s, estimate, mu_zero, deviation })
}

/// Distance between the eigenspace of `λ_{n,s}` and that of `λ_{n,0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenDistance<T> {
    pub s: T,
    /// Largest principal angle (radians).
    pub angle: T,
    /// `‖ξ_{n,s} - P ξ_{n,s}‖_{L²}` where `P ξ` is the normalised projection
    /// onto the limit eigenspace.
    pub l2: T,
    /// Nodal maximum of the same difference.
    pub sup: T,
    #[serde(rename = "relativeGap")]
    pub relative_gap: T,
}

fn cluster_vectors<T: Real>(r: &SpectralResult<T>, n: usize) -> Vec<Vec<T>> {
    let range = r.cluster_of(n, lit(CLUSTER_TOL));
    r.eigenvectors[range.start..range.end.min(r.count())].to_vec()
}

/// Per-order distances to the `s = 0` eigenspace, in grid order.
pub fn eigenfunction_convergence<T: Real>(sw: &SweepResult<T>, n: usize) -> Result<Vec<EigenDistance<T>>> {
    sw.check_index(n)?;
    let zero = &sw.per_s[sw.zero_index()];
    let base = cluster_vectors(zero, n);
    let mb: Vec<Vec<T>> = base.iter().map(|b| sw.mass.entries.matvec(b)).collect();
    let lambda0 = zero.eigenvalues[n];
    sw.per_s
        .iter()
        .zip(&sw.s_grid)
        .map(|(r, &s)| {
            let here = cluster_vectors(r, n);
            let angle = principal_angles(&sw.mass, &base, &here)?[0];
            let xi = &r.eigenvectors[n];
            let mut proj = vec![T::zero(); xi.len()];
            for (b, mbv) in base.iter().zip(&mb) {
                let c = dot(mbv, xi);
                proj.iter_mut().zip(b).for_each(|(p, &bv)| *p = *p + c * bv);
            }
            let norm = sw.mass.entries.quadratic(&proj).max(T::zero()).sqrt();
            let diff: Vec<T> = if norm > T::zero() {
                xi.iter().zip(&proj).map(|(&x, &p)| x - p / norm).collect()
            } else {
                xi.clone()
            };
            let l2 = sw.mass.entries.quadratic(&diff).max(T::zero()).sqrt();
            let sup = diff.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
            let gap = if lambda0.abs() > T::zero() {
                (r.eigenvalues[n] - lambda0).abs() / lambda0.abs()
            } else {
                (r.eigenvalues[n] - lambda0).abs()
            };
            Ok(EigenDistance { s, angle, l2, sup, relative_gap: gap })
        })
        .collect()
}

/// Outcome of [`cone_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeCheck<T> {
    pub passed: bool,
    /// Minimum of `lhs - rhs` over the samples.
    #[serde(rename = "worstSlack")]
    pub worst_slack: T,
    /// `(x, δ, s)` attaining the minimum.
    #[serde(rename = "worstSample")]
    pub worst_sample: Option<(Vec<T>, T, T)>,
    pub samples: usize,
}

/// Uniform sup-norm bound across a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport<T> {
    pub n: usize,
    /// `‖ξ_{n,s}‖_∞ / ‖ξ_{n,s}‖_{L²}` per grid order.
    #[serde(rename = "supNorms")]
    pub sup_norms: Vec<T>,
    /// The single constant bounding every entry of `sup_norms`.
    pub c0: T,
    #[serde(rename = "coneCheck")]
    pub cone_check: ConeCheck<T>,
}

/// Nodal sup-norm of the M-normalised eigenfunction `n` at every order.
pub fn sup_bound_check<T: Real>(sw: &SweepResult<T>, n: usize, d: &Domain<T>) -> Result<BoundReport<T>> {
    sw.check_index(n)?;
    let sup_norms: Vec<T> = sw
        .per_s
        .iter()
        .map(|r| {
            let v = &r.eigenvectors[n];
            let l2 = sw.mass.entries.quadratic(v).sqrt();
            v.iter().fold(T::zero(), |a, &x| a.max(x.abs())) / l2
        })
        .collect();
    let c0 = sup_norms.iter().fold(T::zero(), |a, &b| a.max(b));
    let cp = d.cone_params();
    let cone = cone_check(d, &cp, &default_cone_samples(d, &cp));
    Ok(BoundReport { n, sup_norms, c0, cone_check: cone })
}

/// Threshold of the maximum-principle argument: with
/// `δ = δ0 exp(-(1 + V∞)/C0)`, returns `f∞ + δ^{-N-2} √|Ω| ‖u⁺‖₂`.
pub fn c0_recipe<T: Real>(cp: &ConeParams<T>, d: &Domain<T>, v_inf: T, f_inf: T, u_plus_l2: T) -> Result<T> {
    if [v_inf, f_inf, u_plus_l2].iter().any(|&x| !(x >= T::zero())) {
        return Err(Error::InvalidInput("c0 inputs must be nonnegative".into()));
    }
    if !(cp.c0 > T::zero() && cp.delta0 > T::zero()) {
        return Err(Error::InvalidInput("cone constants must be positive".into()));
    }
    let delta = cp.delta0 * (-(T::one() + v_inf) / cp.c0).exp();
    let power = -(from_usize::<T>(d.dim()) + lit(2.0));
    Ok(f_inf + delta.powf(power) * d.measure().sqrt() * u_plus_l2)
}

/// `∫_δ^ρ r^{-1-2s} dr` (zero when `ρ ≤ δ`).
fn radial_tail<T: Real>(delta: T, rho: T, s: T) -> T {
    if rho <= delta {
        return T::zero();
    }
    if s == T::zero() {
        (rho / delta).ln()
    } else {
        (delta.powf(-(s + s)) - rho.powf(-(s + s))) / (s + s)
    }
}

/// `∫_{Ω \ B_δ(x)} |x - y|^{-N-2s} dy`, radially in closed form and by
/// corner-split Gauss quadrature in the angle.
pub fn truncated_integral<T: Real>(d: &Domain<T>, x: &[T], delta: T, s: T) -> T {
    match d.dim() {
        1 => {
            let (lo, hi) = (d.origin()[0], d.origin()[0] + d.extents()[0]);
            radial_tail(delta, x[0] - lo, s) + radial_tail(delta, hi - x[0], s)
        }
        _ => {
            let rule = GaussRule::<T>::legendre(16);
            let mut cuts = d.corner_angles(x);
            let two_pi = T::PI() + T::PI();
            cuts.insert(0, T::zero());
            cuts.push(two_pi);
            let mut acc = T::zero();
            for w in cuts.windows(2) {
                if w[1] > w[0] {
                    acc = acc
                        + crate::quadrature::graded_both_ends(&rule, w[0], w[1], 4, |t| {
                            let rho = d.exit_distance(x, &[t.cos(), t.sin()]);
                            radial_tail(delta, rho, s)
                        });
                }
            }
            acc
        }
    }
}

/// Checks `∫_{Ω \ B_δ(x)} |x-y|^{-N-2s} dy ≥ C0 log(δ0/δ)` at every sample
/// `(x, δ, s)` and reports the smallest slack.
pub fn cone_check<T: Real>(d: &Domain<T>, cp: &ConeParams<T>, samples: &[(Vec<T>, T, T)]) -> ConeCheck<T> {
    let mut worst = T::infinity();
    let mut worst_sample = None;
    for (x, delta, s) in samples {
        let lhs = truncated_integral(d, x, *delta, *s);
        let rhs = cp.c0 * (cp.delta0 / *delta).ln();
        let slack = lhs - rhs;
        if slack < worst {
            worst = slack;
            worst_sample = Some((x.clone(), *delta, *s));
        }
    }
    ConeCheck { passed: worst >= T::zero(), worst_slack: worst, worst_sample, samples: samples.len() }
}

/// Sample grid for [`cone_check`]: points from the centre to within 1e-6 of
/// the boundary, radii from 0.99·δ0 down to 1e-6·δ0, orders 0 to 0.4.
pub fn default_cone_samples<T: Real>(d: &Domain<T>, cp: &ConeParams<T>) -> Vec<(Vec<T>, T, T)> {
    let fractions = [1e-6, 1e-3, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999_999];
    let radii = [0.99, 0.5, 0.1, 1e-2, 1e-4, 1e-6];
    let orders = [0.0, 0.05, 0.1, 0.25, 0.4];
    let origin = d.origin();
    let ext = d.extents();
    let points: Vec<Vec<T>> = match d.dim() {
        1 => fractions.iter().map(|&f| vec![origin[0] + ext[0] * lit(f)]).collect(),
        _ => fractions
            .iter()
            .flat_map(|&f1| {
                let (o, e) = (&origin, &ext);
                fractions.iter().map(move |&f2| vec![o[0] + e[0] * lit(f1), o[1] + e[1] * lit(f2)])
            })
            .collect(),
    };
    let mut out = Vec::new();
    for x in &points {
        for &r in &radii {
            for &s in &orders {
                out.push((x.clone(), cp.delta0 * lit(r), lit(s)));
            }
        }
    }
    out
}

/// Discrete moduli of continuity of eigenfunction `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquicontinuityTable<T> {
    pub t: Vec<T>,
    /// `omega[i][j]`: modulus at order `s_grid[i]` and separation `t[j]`.
    pub omega: Vec<Vec<T>>,
    /// `max_i omega[i][j]`.
    #[serde(rename = "supOverS")]
    pub sup_over_s: Vec<T>,
    /// Whether every row is nondecreasing in `t` (for increasing `t`).
    pub monotone: bool,
}

/// `ω_s(t) = max{|ξ(x_i) - ξ(x_j)| : |x_i - x_j| ≤ t}` over mesh nodes, for
/// the M-normalised eigenfunction `n`.
pub fn equicontinuity_diagnostic<T: Real>(sw: &SweepResult<T>, n: usize, t_grid: &[T]) -> Result<EquicontinuityTable<T>> {
    sw.check_index(n)?;
    let nodes = &sw.nodes;
    let dist = |i: usize, j: usize| {
        nodes[i].iter().zip(&nodes[j]).fold(T::zero(), |a, (&p, &q)| a + (p - q) * (p - q)).sqrt()
    };
    let omega: Vec<Vec<T>> = sw
        .per_s
        .iter()
        .map(|r| {
            let v = &r.eigenvectors[n];
            t_grid
                .iter()
                .map(|&t| {
                    let mut best = T::zero();
                    for i in 0..nodes.len() {
                        for j in i + 1..nodes.len() {
                            if dist(i, j) <= t {
                                best = best.max((v[i] - v[j]).abs());
                            }
                        }
                    }
                    best
                })
                .collect()
        })
        .collect();
    let sup_over_s = (0..t_grid.len()).map(|j| omega.iter().fold(T::zero(), |a, row| a.max(row[j]))).collect();
    let order: Vec<usize> = {
        let mut o: Vec<usize> = (0..t_grid.len()).collect();
        o.sort_by(|&a, &b| t_grid[a].partial_cmp(&t_grid[b]).unwrap());
        o
    };
    let monotone = omega.iter().all(|row| order.windows(2).all(|w| row[w[0]] <= row[w[1]]));
    Ok(EquicontinuityTable { t: t_grid.to_vec(), omega, sup_over_s, monotone })
}

/// Random-vector test of `‖u‖²_{L²} ≤ C_Ω E_s(u, u)` on mean-zero functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport<T> {
    pub s: T,
    pub trials: usize,
    #[serde(rename = "worstRatio")]
    pub worst_ratio: T,
    /// `2 max{d^N, d^{N+2}} / |Ω|`.
    #[serde(rename = "cOmega")]
    pub c_omega: T,
    /// `1/λ_{1,s}`, the sharp constant for the discrete space.
    #[serde(rename = "inverseLambda1")]
    pub inverse_lambda1: T,
    pub passed: bool,
}

/// `2 max{d^N, d^{N+2}} / |Ω|`.
pub fn poincare_constant<T: Real>(d: &Domain<T>) -> T {
    let diam = d.diameter();
    let n = d.dim() as i32;
    lit::<T>(2.0) * diam.powi(n).max(diam.powi(n + 2)) / d.measure()
}

/// Worst ratio `(u·M·u)/(u·A_s·u)` over `trials` random mean-zero vectors
/// drawn from a seeded generator.
pub fn poincare_check<T: Real>(m: &Mesh<T>, s: T, trials: usize, seed: u64) -> Result<PoincareReport<T>> {
    if trials == 0 {
        return Err(Error::InvalidInput("need at least one trial".into()));
    }
    let a = assemble_es(m, s)?;
    let mass = assemble_mass(m);
    let n = m.node_count();
    let ones = vec![T::one(); n];
    let w = mass.entries.matvec(&ones);
    let total = dot(&ones, &w);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = T::zero();
    for _ in 0..trials {
        let mut u: Vec<T> = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                lit(z)
            })
            .collect();
        let mean = dot(&w, &u) / total;
        u.iter_mut().for_each(|x| *x = *x - mean);
        worst = worst.max(T::one() / rayleigh(&a, &mass, &u)?);
    }
    let lambda1 = solve_eigs(&a, &mass, 2)?.eigenvalues[1];
    let c_omega = poincare_constant(m.domain());
    let inverse_lambda1 = T::one() / lambda1;
    let slack = lit::<T>(1e-9).max(T::epsilon() * lit(1e4));
    let passed = worst <= c_omega && worst <= inverse_lambda1 * (T::one() + slack);
    Ok(PoincareReport { s, trials, worst_ratio: worst, c_omega, inverse_lambda1, passed })
}
