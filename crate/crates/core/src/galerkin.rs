//! Finite-element discretisation: uniform meshes with continuous P1 (1D) or
//! Q1 (2D) elements, the nonlocal energy form, its truncated variant, the
//! mass matrix and the mean-zero Poisson solver.
//!
//! On a uniform mesh the contribution of an ordered element pair depends only
//! on the integer offset between the two elements, so one local matrix is
//! computed per offset and scattered to every pair. Each local integral is
//! written in the relative coordinate `z = y - x`: the inner `x`-integral of
//! the polynomial integrand is exact with a two-point Gauss rule, and the
//! outer `z`-integral runs in polar form so that the diagonal singularity is
//! absorbed by a Gauss–Jacobi rule in the radius.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::Domain;
use crate::linalg::{dot, DenseMatrix};
use crate::quadrature::GaussRule;
use crate::scalar::{format_num, from_usize, lit, to_f64, Real};

/// Largest order for which the singular quadrature is validated.
pub const MAX_ORDER: f64 = 0.9;

/// Uniform tensor mesh of a box domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    domain: Domain<T>,
    cells: usize,
    h: Vec<T>,
    nodes: Vec<Vec<T>>,
    elements: Vec<Vec<usize>>,
}

/// Compact description of a mesh for result records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct MeshInfo<T> {
    pub domain: Domain<T>,
    pub cells: usize,
    pub nodes: usize,
    pub h: T,
}

/// Uniform partition of `d` into `n` cells per coordinate.
pub fn build_mesh<T: Real>(d: &Domain<T>, n: usize) -> Result<Mesh<T>> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 cells per dimension, got {n}")));
    }
    let origin = d.origin();
    let h: Vec<T> = d.extents().iter().map(|&e| e / from_usize(n)).collect();
    let np = n + 1;
    let (nodes, elements) = match d.dim() {
        1 => {
            let nodes = (0..np).map(|i| vec![origin[0] + h[0] * from_usize(i)]).collect();
            let elements = (0..n).map(|p| vec![p, p + 1]).collect();
            (nodes, elements)
        }
        _ => {
            let mut nodes = Vec::with_capacity(np * np);
            for j in 0..np {
                for i in 0..np {
                    nodes.push(vec![
                        origin[0] + h[0] * from_usize(i),
                        origin[1] + h[1] * from_usize(j),
                    ]);
                }
            }
            let mut elements = Vec::with_capacity(n * n);
            for q in 0..n {
                for p in 0..n {
                    let base = p + np * q;
                    elements.push(vec![base, base + 1, base + np, base + np + 1]);
                }
            }
            (nodes, elements)
        }
    };
    Ok(Mesh { domain: *d, cells: n, h, nodes, elements })
}

impl<T: Real> Mesh<T> {
    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Cells per coordinate direction.
    pub fn cells_per_dim(&self) -> usize {
        self.cells
    }

    pub fn cell_count(&self) -> usize {
        self.elements.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Vec<T>] {
        &self.nodes
    }

    /// Node indices of each cell, in lexicographic corner order.
    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    /// Largest cell side.
    pub fn h(&self) -> T {
        self.h.iter().fold(T::zero(), |a, &b| a.max(b))
    }

    pub fn spacing(&self) -> &[T] {
        &self.h
    }

    pub fn info(&self) -> MeshInfo<T> {
        MeshInfo { domain: self.domain, cells: self.cells, nodes: self.node_count(), h: self.h() }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: &ScalarField<T>) -> Vec<T> {
        self.nodes.iter().map(|x| f.evaluate(x)).collect()
    }

    fn node_index(&self, multi: &[usize]) -> usize {
        match multi {
            [i] => *i,
            [i, j] => i + (self.cells + 1) * j,
            _ => unreachable!("meshes are 1D or 2D"),
        }
    }
}

/// Which bilinear form a matrix represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormKind {
    Stiffness,
    Truncated,
    Mass,
}

impl FormKind {
    pub fn name(self) -> &'static str {
        match self {
            FormKind::Stiffness => "stiffness",
            FormKind::Truncated => "truncated",
            FormKind::Mass => "mass",
        }
    }
}

/// Gram matrix of a bilinear form over the nodal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FormMatrix<T> {
    pub entries: DenseMatrix<T>,
    pub kind: FormKind,
    pub s: Option<T>,
    pub delta: Option<T>,
}

#[derive(Serialize)]
struct FormMatrixJson<'a, T> {
    n: usize,
    kind: &'a str,
    s: Option<T>,
    delta: Option<T>,
    data: &'a [T],
}

/// Numerical invariants of an assembled matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormDiagnostics<T> {
    /// `max |A - A^T| / max |A|`.
    pub asymmetry: T,
    /// `max |A 1| / max |A|`.
    pub row_sum: T,
    /// Smallest eigenvalue relative to `max |A|`.
    pub min_eigenvalue: T,
}

impl<T: Real> FormMatrix<T> {
    pub fn n(&self) -> usize {
        self.entries.rows()
    }

    pub fn is_stiffness(&self) -> bool {
        matches!(self.kind, FormKind::Stiffness | FormKind::Truncated)
    }

    /// Full matrix, row-major, one row per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n() {
            let row: Vec<String> = self.entries.row(i).iter().map(|&v| format_num(v)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// `{"n", "kind", "s", "delta", "data"}` with `data` row-major.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(FormMatrixJson {
            n: self.n(),
            kind: self.kind.name(),
            s: self.s,
            delta: self.delta,
            data: self.entries.as_slice(),
        })
        .expect("matrix serialises")
    }

    pub fn diagnostics(&self) -> Result<FormDiagnostics<T>> {
        let scale = self.entries.max_abs().max(T::min_positive_value());
        let ones = vec![T::one(); self.n()];
        let row_sum = crate::linalg::max_abs(&self.entries.matvec(&ones)) / scale;
        let eig = self.entries.symmetric_eigen()?;
        let min_eigenvalue = eig.values.first().copied().unwrap_or(T::zero()) / scale;
        Ok(FormDiagnostics { asymmetry: self.entries.asymmetry() / scale, row_sum, min_eigenvalue })
    }
}

fn check_order<T: Real>(s: T) -> Result<()> {
    if !(s >= T::zero()) || s >= T::one() {
        return Err(Error::InvalidOrder(to_f64(s)));
    }
    if s > lit(MAX_ORDER) {
        return Err(Error::UnsupportedOrder(to_f64(s)));
    }
    Ok(())
}

/// Stiffness matrix of `E_s(u, v) = ½ ∬ (u(x)-u(y))(v(x)-v(y)) |x-y|^{-N-2s}`.
pub fn assemble_es<T: Real>(m: &Mesh<T>, s: T) -> Result<FormMatrix<T>> {
    check_order(s)?;
    Ok(FormMatrix { entries: assemble(m, s, None), kind: FormKind::Stiffness, s: Some(s), delta: None })
}

/// Stiffness matrix with the kernel restricted to `|x - y| < delta`.
pub fn assemble_truncated_es<T: Real>(m: &Mesh<T>, s: T, delta: T) -> Result<FormMatrix<T>> {
    check_order(s)?;
    if !(delta > T::zero()) {
        return Err(Error::InvalidInput("truncation radius must be positive".into()));
    }
    Ok(FormMatrix {
        entries: assemble(m, s, Some(delta)),
        kind: FormKind::Truncated,
        s: Some(s),
        delta: Some(delta),
    })
}

/// L² Gram matrix of the nodal basis.
pub fn assemble_mass<T: Real>(m: &Mesh<T>) -> FormMatrix<T> {
    let sixth = T::one() / lit(6.0);
    // 1D element mass (h/6)[[2,1],[1,2]]
    let local_1d = |h: T, a: usize, b: usize| if a == b { h * sixth * lit(2.0) } else { h * sixth };
    let n = m.node_count();
    let mut mat = DenseMatrix::zeros(n, n);
    for el in &m.elements {
        for (a, &i) in el.iter().enumerate() {
            for (b, &j) in el.iter().enumerate() {
                let v = match m.dim() {
                    1 => local_1d(m.h[0], a, b),
                    _ => local_1d(m.h[0], a & 1, b & 1) * local_1d(m.h[1], a >> 1, b >> 1),
                };
                mat[(i, j)] = mat[(i, j)] + v;
            }
        }
    }
    FormMatrix { entries: mat, kind: FormKind::Mass, s: None, delta: None }
}

/// Mean-zero weak solution of `E_s(u, v) = <f, v>` for all `v`: returns `u`
/// with `A u = M f` and `1·M u = 0`.
pub fn solve_poisson<T: Real>(a: &FormMatrix<T>, m: &FormMatrix<T>, f: &[T]) -> Result<Vec<T>> {
    if !a.is_stiffness() || m.kind != FormKind::Mass {
        return Err(Error::InvalidInput("expected a stiffness and a mass matrix".into()));
    }
    let n = a.n();
    if m.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.n() });
    }
    if f.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.len() });
    }
    let ones = vec![T::one(); n];
    let w = m.entries.matvec(&ones);
    let rhs = m.entries.matvec(f);
    let mean = dot(&ones, &rhs);
    let f_norm = dot(f, &rhs).max(T::zero()).sqrt();
    let one_norm = dot(&ones, &w).sqrt();
    if mean.abs() > T::epsilon().sqrt() * f_norm * one_norm || (f_norm == T::zero() && mean != T::zero()) {
        return Err(Error::NotMeanZero(to_f64(mean)));
    }
    // Deflate the constant null vector with a rank-one term of matching scale.
    let c = a.entries.max_abs() / (dot(&w, &w) / from_usize(n));
    let mut k = a.entries.clone();
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] = k[(i, j)] + c * w[i] * w[j];
        }
    }
    let chol = k.cholesky().map_err(|_| Error::SingularSystem)?;
    let u = chol.solve(&rhs);
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(u)
}

// ---------------------------------------------------------------------------
// Singular element-pair quadrature.

const GAUSS_RADIAL: usize = 16;
const GAUSS_ANGULAR: usize = 16;
const JACOBI_RADIAL: usize = 8;

struct Rules<T> {
    inner: GaussRule<T>,
    radial: GaussRule<T>,
    angular: GaussRule<T>,
    /// Gauss–Jacobi on [0, 1] with weight `p^{1-2s}`.
    singular: GaussRule<T>,
}

/// One offset between element multi-indices, with its union node set.
struct OffsetPair<T> {
    offset: Vec<i64>,
    /// Node offsets relative to the first element's origin corner.
    nodes: Vec<Vec<i64>>,
    /// For each union node, its corner index in the first / second element.
    in_first: Vec<Option<usize>>,
    in_second: Vec<Option<usize>>,
    local: Vec<T>,
}

fn corner_bits(c: usize, dim: usize) -> Vec<i64> {
    (0..dim).map(|a| ((c >> a) & 1) as i64).collect()
}

fn corner_index(rel: &[i64]) -> Option<usize> {
    let mut c = 0;
    for (a, &r) in rel.iter().enumerate() {
        match r {
            0 => {}
            1 => c |= 1 << a,
            _ => return None,
        }
    }
    Some(c)
}

impl<T: Real> OffsetPair<T> {
    fn new(offset: Vec<i64>) -> Self {
        let dim = offset.len();
        let corners = 1usize << dim;
        let mut nodes: Vec<Vec<i64>> = (0..corners).map(|c| corner_bits(c, dim)).collect();
        for c in 0..corners {
            let p: Vec<i64> = corner_bits(c, dim).iter().zip(&offset).map(|(b, d)| b + d).collect();
            if !nodes.contains(&p) {
                nodes.push(p);
            }
        }
        let in_first = nodes.iter().map(|p| corner_index(p)).collect();
        let in_second = nodes
            .iter()
            .map(|p| {
                let rel: Vec<i64> = p.iter().zip(&offset).map(|(a, d)| a - d).collect();
                corner_index(&rel)
            })
            .collect();
        let m = nodes.len();
        Self { offset, nodes, in_first, in_second, local: vec![T::zero(); m * m] }
    }

    fn size(&self) -> usize {
        self.nodes.len()
    }
}

/// Tensor Q1 shape function of corner `c` at reference point `xi`.
#[inline]
fn shape<T: Real>(c: usize, xi: &[T]) -> T {
    xi.iter()
        .enumerate()
        .fold(T::one(), |acc, (a, &t)| acc * if (c >> a) & 1 == 1 { t } else { T::one() - t })
}

/// `∫ v v^T dξ` over the first element at relative displacement `zeta`
/// (in cell units), accumulated with weight `w` into `out`.
fn accumulate_inner<T: Real>(pair: &OffsetPair<T>, rule: &GaussRule<T>, zeta: &[T], w: T, out: &mut [T], v: &mut [T]) {
    let dim = zeta.len();
    let mut lo = [T::zero(); 2];
    let mut len = [T::zero(); 2];
    for a in 0..dim {
        let d = T::from_i64(pair.offset[a]).unwrap();
        let l = T::zero().max(d - zeta[a]);
        let u = T::one().min(d + T::one() - zeta[a]);
        if !(u > l) {
            return;
        }
        lo[a] = l;
        len[a] = u - l;
    }
    let m = pair.size();
    let q = rule.len();
    let total = q.pow(dim as u32);
    let mut xi = [T::zero(); 2];
    let mut eta = [T::zero(); 2];
    for idx in 0..total {
        let mut wt = w;
        let mut rest = idx;
        for a in 0..dim {
            let k = rest % q;
            rest /= q;
            xi[a] = lo[a] + len[a] * rule.nodes[k];
            wt = wt * len[a] * rule.weights[k];
            eta[a] = xi[a] + zeta[a] - T::from_i64(pair.offset[a]).unwrap();
        }
        for (i, vi) in v.iter_mut().enumerate().take(m) {
            let mut val = T::zero();
            if let Some(c) = pair.in_first[i] {
                val = val + shape(c, &xi[..dim]);
            }
            if let Some(c) = pair.in_second[i] {
                val = val - shape(c, &eta[..dim]);
            }
            *vi = val;
        }
        for i in 0..m {
            let wi = wt * v[i];
            if wi == T::zero() {
                continue;
            }
            for j in 0..m {
                out[i * m + j] = out[i * m + j] + wi * v[j];
            }
        }
    }
}

/// Radial integral `∫_{r0}^{r1} r^{-1-2s} H(r ω) dr` along direction `omega`
/// (physical units); `r0 == 0` marks a ray starting at the diagonal, where
/// `H = O(r^2)` and Gauss–Jacobi absorbs the kernel.
#[allow(clippy::too_many_arguments)]
fn accumulate_ray<T: Real>(
    pair: &mut OffsetPair<T>,
    rules: &Rules<T>,
    h: &[T],
    omega: &[T],
    r0: T,
    r1: T,
    s: T,
    weight: T,
    v: &mut [T],
) {
    if !(r1 > r0) {
        return;
    }
    let dim = h.len();
    let cell_volume = h.iter().fold(T::one(), |p, &x| p * x);
    let mut zeta = [T::zero(); 2];
    let mut local = std::mem::take(&mut pair.local);
    if r0 == T::zero() {
        // ∫_0^{r1} r^{1-2s} (H(rω)/r^2) dr = r1^{2-2s} ∫_0^1 p^{1-2s} H(r1 p ω)/(r1 p)^2 dp
        let scale = r1.powf(lit::<T>(2.0) - s - s);
        for (&p, &w) in rules.singular.nodes.iter().zip(&rules.singular.weights) {
            let r = r1 * p;
            for a in 0..dim {
                zeta[a] = r * omega[a] / h[a];
            }
            let wt = weight * scale * w * cell_volume / (r * r);
            accumulate_inner(pair, &rules.inner, &zeta[..dim], wt, &mut local, v);
        }
    } else {
        let expo = -(T::one() + s + s);
        for (r, w) in rules.radial.mapped(r0, r1) {
            for a in 0..dim {
                zeta[a] = r * omega[a] / h[a];
            }
            let wt = weight * w * r.powf(expo) * cell_volume;
            accumulate_inner(pair, &rules.inner, &zeta[..dim], wt, &mut local, v);
        }
    }
    pair.local = local;
}

/// Entry and exit radius of the ray `t ω` through the box `[lo, hi]`.
fn ray_box<T: Real>(omega: &[T], lo: &[T], hi: &[T]) -> (T, T) {
    let mut t0 = T::zero();
    let mut t1 = T::infinity();
    for a in 0..omega.len() {
        if omega[a] == T::zero() {
            if lo[a] > T::zero() || hi[a] < T::zero() {
                return (T::one(), T::zero());
            }
            continue;
        }
        let (mut p, mut q) = (lo[a] / omega[a], hi[a] / omega[a]);
        if p > q {
            std::mem::swap(&mut p, &mut q);
        }
        t0 = t0.max(p);
        t1 = t1.min(q);
    }
    (t0, t1)
}

/// Integrates the local matrix over the relative-displacement box
/// `[lo, hi]` (physical units), which either has the origin as a corner or
/// does not contain it.
fn integrate_box<T: Real>(
    pair: &mut OffsetPair<T>,
    rules: &Rules<T>,
    h: &[T],
    lo: &[T],
    hi: &[T],
    s: T,
    delta: Option<T>,
    v: &mut [T],
) {
    let dim = h.len();
    let touches = (0..dim).all(|a| lo[a] == T::zero() || hi[a] == T::zero());
    let far = (0..dim).fold(T::zero(), |acc, a| acc + lo[a].abs().max(hi[a].abs()).powi(2)).sqrt();
    let near = (0..dim)
        .fold(T::zero(), |acc, a| {
            let c = if lo[a] > T::zero() { lo[a] } else if hi[a] < T::zero() { hi[a] } else { T::zero() };
            acc + c * c
        })
        .sqrt();
    let delta = match delta {
        Some(d) if d <= near => return,
        Some(d) if d < far => Some(d),
        _ => None,
    };
    let clip = |r1: T| delta.map_or(r1, |d| r1.min(d));

    if dim == 1 {
        let (sign, r0, r1) = if hi[0] <= T::zero() { (-T::one(), -hi[0], -lo[0]) } else { (T::one(), lo[0], hi[0]) };
        let r0 = if touches { T::zero() } else { r0 };
        accumulate_ray(pair, rules, h, &[sign], r0, clip(r1), s, T::one(), v);
        return;
    }

    // 2D: polar angles relative to the box centre direction.
    let centre = [(lo[0] + hi[0]) * lit(0.5), (lo[1] + hi[1]) * lit(0.5)];
    let base = centre[1].atan2(centre[0]);
    let pi = T::PI();
    let rel = |x: T, y: T| {
        let mut t = y.atan2(x) - base;
        if t > pi {
            t = t - pi - pi;
        } else if t < -pi {
            t = t + pi + pi;
        }
        t
    };
    let corners = [[lo[0], lo[1]], [hi[0], lo[1]], [lo[0], hi[1]], [hi[0], hi[1]]];
    let mut cuts: Vec<T> = corners
        .iter()
        .filter(|c| !(c[0] == T::zero() && c[1] == T::zero()))
        .map(|c| rel(c[0], c[1]))
        .collect();
    if touches {
        // the two edges through the origin bound the angular range
        for c in &corners {
            if c[0] == T::zero() && c[1] != T::zero() {
                cuts.push(rel(T::zero(), c[1]));
            }
            if c[1] == T::zero() && c[0] != T::zero() {
                cuts.push(rel(c[0], T::zero()));
            }
        }
    }
    let (amin, amax) = cuts.iter().fold((T::infinity(), T::neg_infinity()), |(a, b), &t| (a.min(t), b.max(t)));
    if let Some(d) = delta {
        for a in 0..2 {
            let b = 1 - a;
            for &c in &[lo[a], hi[a]] {
                if d > c.abs() {
                    let w = (d * d - c * c).sqrt();
                    for other in [w, -w] {
                        if other > lo[b] && other < hi[b] {
                            let mut p = [T::zero(); 2];
                            p[a] = c;
                            p[b] = other;
                            cuts.push(rel(p[0], p[1]));
                        }
                    }
                }
            }
        }
    }
    cuts.retain(|&t| t >= amin && t <= amax);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * lit(16.0));
    let box_lo = [lo[0], lo[1]];
    let box_hi = [hi[0], hi[1]];
    for w in cuts.windows(2) {
        for (t, wt) in rules.angular.mapped(w[0], w[1]) {
            let theta = base + t;
            let omega = [theta.cos(), theta.sin()];
            let (r0, r1) = ray_box(&omega, &box_lo, &box_hi);
            let r0 = if touches { T::zero() } else { r0 };
            accumulate_ray(pair, rules, h, &omega, r0, clip(r1), s, wt, v);
        }
    }
}

fn offset_local<T: Real>(offset: Vec<i64>, h: &[T], s: T, delta: Option<T>, rules: &Rules<T>) -> OffsetPair<T> {
    let mut pair = OffsetPair::new(offset);
    let dim = h.len();
    let mut v = vec![T::zero(); pair.size()];
    // relative displacement lies in (offset + [-1, 1]^N) h, split into unit boxes
    let boxes = 1usize << dim;
    for b in 0..boxes {
        let mut lo = [T::zero(); 2];
        let mut hi = [T::zero(); 2];
        for a in 0..dim {
            let k = pair.offset[a] - 1 + ((b >> a) & 1) as i64;
            lo[a] = T::from_i64(k).unwrap() * h[a];
            hi[a] = T::from_i64(k + 1).unwrap() * h[a];
        }
        integrate_box(&mut pair, rules, h, &lo[..dim], &hi[..dim], s, delta, &mut v);
    }
    pair
}

fn assemble<T: Real>(m: &Mesh<T>, s: T, delta: Option<T>) -> DenseMatrix<T> {
    let rules = Rules {
        inner: GaussRule::legendre(2).mapped_unit(),
        radial: GaussRule::legendre(GAUSS_RADIAL),
        angular: GaussRule::legendre(GAUSS_ANGULAR),
        singular: GaussRule::jacobi_unit(JACOBI_RADIAL, T::one() - s - s),
    };
    let dim = m.dim();
    let n = m.cells as i64;
    let offsets: Vec<Vec<i64>> = match dim {
        1 => (-(n - 1)..n).map(|d| vec![d]).collect(),
        _ => (-(n - 1)..n).flat_map(|d2| (-(n - 1)..n).map(move |d1| vec![d1, d2])).collect(),
    };
    let locals: Vec<OffsetPair<T>> =
        offsets.into_par_iter().map(|d| offset_local(d, &m.h, s, delta, &rules)).collect();

    let size = m.node_count();
    let mut mat = DenseMatrix::zeros(size, size);
    let half = lit::<T>(0.5);
    let cells = m.cells as i64;
    let mut idx = Vec::new();
    for pair in &locals {
        let k = pair.size();
        let ranges: Vec<(i64, i64)> = pair.offset.iter().map(|&d| (0.max(-d), cells.min(cells - d))).collect();
        let mut first = vec![0i64; dim];
        let mut multi = vec![0usize; dim];
        let count: i64 = ranges.iter().map(|&(a, b)| b - a).product();
        for c in 0..count {
            let mut rest = c;
            for a in 0..dim {
                let w = ranges[a].1 - ranges[a].0;
                first[a] = ranges[a].0 + rest % w;
                rest /= w;
            }
            idx.clear();
            for node in &pair.nodes {
                for a in 0..dim {
                    multi[a] = (first[a] + node[a]) as usize;
                }
                idx.push(m.node_index(&multi));
            }
            for i in 0..k {
                let row = mat.row_mut(idx[i]);
                for j in 0..k {
                    row[idx[j]] = row[idx[j]] + half * pair.local[i * k + j];
                }
            }
        }
    }
    mat
}
