//! The generalised eigenproblem `A v = λ M v` of the nonlocal energy form,
//! Rayleigh quotients, min–max bounds and eigenspace comparison.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::galerkin::{FormKind, FormMatrix, MeshInfo};
use crate::geometry::Domain;
use crate::kernels::sphere_measure;
use crate::linalg::{dot, norm2, DenseMatrix};
use crate::quadrature::GaussRule;
use crate::scalar::{from_usize, lit, Real};

/// Lowest eigenpairs of one stiffness/mass pencil.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult<T> {
    pub s: T,
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<T>,
    /// M-orthonormal coefficient vectors, one per eigenvalue.
    pub eigenvectors: Vec<Vec<T>>,
    pub mesh: Option<MeshInfo<T>>,
    /// `‖A v - λ M v‖₂` per pair.
    pub residuals: Vec<T>,
}

impl<T: Real> Serialize for SpectralResult<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("SpectralResult", 4)?;
        st.serialize_field("s", &self.s)?;
        st.serialize_field("lambda", &self.eigenvalues)?;
        st.serialize_field("residuals", &self.residuals)?;
        st.serialize_field("mesh", &self.mesh)?;
        st.end()
    }
}

/// Outcome of the structural checks on a [`SpectralResult`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralChecks<T> {
    pub lambda0: T,
    /// `max |v_0 - mean| / |mean|` for the ground state.
    pub constant_deviation: T,
    pub ascending: bool,
    /// `max |V^T M V - I|`.
    pub orthonormality: T,
    /// `max residual / max |A|`.
    pub relative_residual: T,
    pub passed: bool,
}

impl<T: Real> SpectralResult<T> {
    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn with_mesh(mut self, mesh: MeshInfo<T>) -> Self {
        self.mesh = Some(mesh);
        self
    }

    /// JSON including the eigenvectors under `"vectors"`.
    pub fn to_json_with_vectors(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("result serialises");
        v["vectors"] = serde_json::to_value(&self.eigenvectors).expect("vectors serialise");
        v
    }

    /// Verifies the ground state, ordering, orthonormality and residuals.
    pub fn checks(&self, a: &FormMatrix<T>, m: &FormMatrix<T>) -> SpectralChecks<T> {
        let lambda0 = self.eigenvalues.first().copied().unwrap_or(T::nan());
        let constant_deviation = self.eigenvectors.first().map_or(T::nan(), |v| {
            let mean = v.iter().copied().sum::<T>() / from_usize(v.len());
            v.iter().fold(T::zero(), |acc, &x| acc.max((x - mean).abs())) / mean.abs()
        });
        let ascending = self.eigenvalues.windows(2).all(|w| w[0] <= w[1]);
        let mut orthonormality = T::zero();
        let mvs: Vec<Vec<T>> = self.eigenvectors.iter().map(|v| m.entries.matvec(v)).collect();
        for (i, vi) in self.eigenvectors.iter().enumerate() {
            for (j, mvj) in mvs.iter().enumerate() {
                let target = if i == j { T::one() } else { T::zero() };
                orthonormality = orthonormality.max((dot(vi, mvj) - target).abs());
            }
        }
        let scale = a.entries.max_abs().max(T::min_positive_value());
        let relative_residual = self.residuals.iter().fold(T::zero(), |acc, &r| acc.max(r)) / scale;
        let tol_lambda = lit::<T>(1e-10).max(T::epsilon() * lit(1e4));
        let tol_const = lit::<T>(1e-8).max(T::epsilon() * lit(1e4));
        let tol_orth = lit::<T>(1e-10).max(T::epsilon() * lit(1e4));
        let tol_res = lit::<T>(1e-9).max(T::epsilon() * lit(1e4));
        let passed = lambda0.abs() <= tol_lambda
            && constant_deviation <= tol_const
            && ascending
            && orthonormality <= tol_orth
            && relative_residual <= tol_res;
        SpectralChecks { lambda0, constant_deviation, ascending, orthonormality, relative_residual, passed }
    }

    /// Index ranges of eigenvalues equal within `rel_tol` (relative to the
    /// largest magnitude in the group, absolute near zero).
    pub fn clusters(&self, rel_tol: T) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        let scale = self.eigenvalues.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
        for i in 1..=self.eigenvalues.len() {
            let split = i == self.eigenvalues.len() || {
                let (a, b) = (self.eigenvalues[i - 1], self.eigenvalues[i]);
                (b - a).abs() > rel_tol * a.abs().max(b.abs()).max(rel_tol * scale)
            };
            if split {
                out.push(start..i);
                start = i;
            }
        }
        out
    }

    /// Cluster containing eigenvalue `n`.
    pub fn cluster_of(&self, n: usize, rel_tol: T) -> std::ops::Range<usize> {
        self.clusters(rel_tol).into_iter().find(|r| r.contains(&n)).unwrap_or(n..n + 1)
    }
}

fn check_pencil<T: Real>(a: &FormMatrix<T>, m: &FormMatrix<T>) -> Result<()> {
    if !a.is_stiffness() || m.kind != FormKind::Mass {
        return Err(Error::InvalidInput("expected a stiffness and a mass matrix".into()));
    }
    if a.n() != m.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), got: m.n() });
    }
    Ok(())
}

/// Lowest `count` eigenpairs of `A v = λ M v` by Cholesky reduction and a
/// dense symmetric eigensolver. Each eigenvector is signed so that its
/// largest-magnitude entry is positive.
pub fn solve_eigs<T: Real>(a: &FormMatrix<T>, m: &FormMatrix<T>, count: usize) -> Result<SpectralResult<T>> {
    check_pencil(a, m)?;
    let n = a.n();
    if count > n {
        return Err(Error::DimensionMismatch { expected: n, got: count });
    }
    let chol = m.entries.cholesky()?;
    let reduced = chol.congruence(&a.entries);
    let eig = reduced.symmetric_eigen()?;
    let mut eigenvalues = Vec::with_capacity(count);
    let mut eigenvectors = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    for k in 0..count {
        let lambda = eig.values[k];
        let mut v = chol.solve_upper(eig.vectors.row(k));
        let pivot = v.iter().copied().fold(T::zero(), |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if pivot < T::zero() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let av = a.entries.matvec(&v);
        let mv = m.entries.matvec(&v);
        let r: Vec<T> = av.iter().zip(&mv).map(|(&x, &y)| x - lambda * y).collect();
        residuals.push(norm2(&r));
        eigenvalues.push(lambda);
        eigenvectors.push(v);
    }
    Ok(SpectralResult { s: a.s.unwrap_or(T::zero()), eigenvalues, eigenvectors, mesh: None, residuals })
}

/// `(u·A·u) / (u·M·u)`.
pub fn rayleigh<T: Real>(a: &FormMatrix<T>, m: &FormMatrix<T>, u: &[T]) -> Result<T> {
    check_pencil(a, m)?;
    if u.len() != a.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), got: u.len() });
    }
    let den = m.entries.quadratic(u);
    if !(den > T::zero()) {
        return Err(Error::ZeroVector);
    }
    Ok(a.entries.quadratic(u) / den)
}

/// Mean-zero test: `|1·M·v| ≤ √ε ‖1‖_M ‖v‖_M`.
pub fn is_mean_zero<T: Real>(m: &FormMatrix<T>, v: &[T]) -> bool {
    let ones = vec![T::one(); v.len()];
    let mv = m.entries.matvec(v);
    let mean = dot(&ones, &mv);
    let norms = (m.entries.quadratic(&ones) * dot(v, &mv)).max(T::zero()).sqrt();
    mean.abs() <= T::epsilon().sqrt() * norms
}

/// Largest Rayleigh quotient over `span(basis)`: the top eigenvalue of the
/// projected pencil. By the min–max principle this bounds `λ_k` from above,
/// `k = basis.len()`.
pub fn minmax_upper<T: Real>(a: &FormMatrix<T>, m: &FormMatrix<T>, basis: &[Vec<T>]) -> Result<T> {
    check_pencil(a, m)?;
    if basis.is_empty() {
        return Err(Error::DependentVectors);
    }
    for v in basis {
        if v.len() != a.n() {
            return Err(Error::DimensionMismatch { expected: a.n(), got: v.len() });
        }
        if !is_mean_zero(m, v) {
            let ones = vec![T::one(); v.len()];
            return Err(Error::NotMeanZero(crate::scalar::to_f64(m.entries.bilinear(&ones, v))));
        }
    }
    let k = basis.len();
    let av: Vec<Vec<T>> = basis.iter().map(|v| a.entries.matvec(v)).collect();
    let mv: Vec<Vec<T>> = basis.iter().map(|v| m.entries.matvec(v)).collect();
    let p = DenseMatrix::from_fn(k, k, |i, j| dot(&basis[i], &av[j]));
    let q = DenseMatrix::from_fn(k, k, |i, j| dot(&basis[i], &mv[j]));
    // reject numerically dependent sets before the reduction
    let qe = q.symmetric_eigen()?;
    let (lo, hi) = (qe.values[0], qe.values[k - 1]);
    if !(lo > hi * T::epsilon() * lit(1e3)) {
        return Err(Error::DependentVectors);
    }
    let chol = q.cholesky().map_err(|_| Error::DependentVectors)?;
    let reduced = chol.congruence(&p);
    let e = reduced.symmetric_eigen()?;
    Ok(e.values[k - 1])
}

/// A function with a known upper bound on `‖u‖_∞ + ‖∇u‖_∞`.
#[derive(Debug, Clone)]
pub struct C1Function<T> {
    pub field: ScalarField<T>,
    pub c1_norm: T,
}

/// Upper bound on `sup_{0 ≤ s ≤ s0} λ_{n,s}`, `n = V.len()`, for a mean-zero
/// subspace `V` of C¹ functions, using
/// `E_s(u,u) ≤ ‖u‖²_{C¹} |Ω| |S^{N-1}| d^{2(1-s)} / (4(1-s))`
/// and `‖u‖²_{C¹} ≤ C_V² ‖u‖²_{L²}` with `C_V² = Σ‖u_i‖²_{C¹} / λ_min(Gram)`.
pub fn c1_subspace_bound<T: Real>(v: &[C1Function<T>], d: &Domain<T>, s0: T) -> Result<T> {
    if v.is_empty() {
        return Err(Error::DependentVectors);
    }
    if !(s0 >= T::zero()) || s0 >= T::one() {
        return Err(Error::InvalidOrder(crate::scalar::to_f64(s0)));
    }
    let gram = l2_gram(v, d);
    let eig = gram.symmetric_eigen()?;
    let lmin = eig.values[0];
    if !(lmin > T::zero()) {
        return Err(Error::DependentVectors);
    }
    let c1_sq: T = v.iter().map(|f| f.c1_norm * f.c1_norm).sum();
    let cv_sq = c1_sq / lmin;
    let diam = d.diameter();
    let two = lit::<T>(2.0);
    // d^{2(1-s)} over [0, s0] peaks at one of the endpoints
    let radial = diam.powf(two).max(diam.powf(two - two * s0));
    Ok(cv_sq * d.measure() * sphere_measure::<T>(d.dim()) * radial / (lit::<T>(4.0) * (T::one() - s0)))
}

/// L² Gram matrix by composite Gauss quadrature (64 cells × 6 points per axis).
fn l2_gram<T: Real>(v: &[C1Function<T>], d: &Domain<T>) -> DenseMatrix<T> {
    let rule = GaussRule::<T>::legendre(6);
    let cells = 64;
    let origin = d.origin();
    let ext = d.extents();
    let axis_points = |a: usize| -> Vec<(T, T)> {
        let h = ext[a] / from_usize(cells);
        (0..cells)
            .flat_map(|c| {
                let lo = origin[a] + h * from_usize(c);
                rule.mapped(lo, lo + h).collect::<Vec<_>>()
            })
            .collect()
    };
    let k = v.len();
    let mut g = DenseMatrix::zeros(k, k);
    let mut vals = vec![T::zero(); k];
    let mut add = |x: &[T], w: T| {
        for (i, f) in v.iter().enumerate() {
            vals[i] = f.field.evaluate(x);
        }
        for i in 0..k {
            for j in 0..k {
                g[(i, j)] = g[(i, j)] + w * vals[i] * vals[j];
            }
        }
    };
    let p0 = axis_points(0);
    if d.dim() == 1 {
        for &(x, w) in &p0 {
            add(&[x], w);
        }
    } else {
        let p1 = axis_points(1);
        for &(y, wy) in &p1 {
            for &(x, wx) in &p0 {
                add(&[x, y], wx * wy);
            }
        }
    }
    g
}

/// Principal angles (radians, descending) between the spans of two
/// M-orthonormal sets, computed from `sin θ` for accuracy at small angles.
pub fn principal_angles<T: Real>(m: &FormMatrix<T>, u: &[Vec<T>], v: &[Vec<T>]) -> Result<Vec<T>> {
    if u.is_empty() || v.is_empty() {
        return Err(Error::ZeroVector);
    }
    // residual of v after M-orthogonal projection onto span(u)
    let mu: Vec<Vec<T>> = u.iter().map(|x| m.entries.matvec(x)).collect();
    let residual: Vec<Vec<T>> = v
        .iter()
        .map(|vj| {
            let mut r = vj.clone();
            for (ui, mui) in u.iter().zip(&mu) {
                let c = dot(mui, vj);
                r.iter_mut().zip(ui).for_each(|(a, &b)| *a = *a - c * b);
            }
            r
        })
        .collect();
    let mr: Vec<Vec<T>> = residual.iter().map(|x| m.entries.matvec(x)).collect();
    let k = v.len();
    let g = DenseMatrix::from_fn(k, k, |i, j| dot(&residual[i], &mr[j]));
    let e = g.symmetric_eigen()?;
    let mut angles: Vec<T> =
        e.values.iter().map(|&x| x.max(T::zero()).sqrt().min(T::one()).asin()).collect();
    angles.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(angles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galerkin::{assemble_es, assemble_mass, build_mesh};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pencil(n: usize, s: f64) -> (FormMatrix<f64>, FormMatrix<f64>) {
        let m = build_mesh(&Domain::unit_interval(), n).unwrap();
        (assemble_es(&m, s).unwrap(), assemble_mass(&m))
    }

    fn mean_zero(m: &FormMatrix<f64>, mut v: Vec<f64>) -> Vec<f64> {
        let ones = vec![1.0; v.len()];
        let c = m.entries.bilinear(&ones, &v) / m.entries.quadratic(&ones);
        v.iter_mut().for_each(|x| *x -= c);
        v
    }

    #[test]
    fn basic_invariants() {
        for s in [0.0, 0.2, 0.4] {
            let (a, m) = pencil(32, s);
            let r = solve_eigs(&a, &m, 10).unwrap();
            let c = r.checks(&a, &m);
            assert!(c.passed, "s={s}: {c:?}");
            assert!(r.eigenvalues[1] > 0.0);
        }
    }

    #[test]
    fn rayleigh_properties() {
        let (a, m) = pencil(32, 0.25);
        let r = solve_eigs(&a, &m, 5).unwrap();
        assert!(rayleigh(&a, &m, &[1.0; 33]).unwrap().abs() < 1e-12);
        assert_eq!(rayleigh(&a, &m, &[0.0; 33]), Err(Error::ZeroVector));
        let v = &r.eigenvectors[2];
        let q1 = rayleigh(&a, &m, v).unwrap();
        let q2 = rayleigh(&a, &m, &v.iter().map(|x| -3.5 * x).collect::<Vec<_>>()).unwrap();
        assert!((q1 - r.eigenvalues[2]).abs() < 1e-10 * r.eigenvalues[2]);
        assert!((q1 - q2).abs() < 1e-12 * q1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let u = mean_zero(&m, (0..33).map(|_| rng.random::<f64>() - 0.5).collect());
            assert!(rayleigh(&a, &m, &u).unwrap() >= r.eigenvalues[1] - 1e-9);
        }
    }

    #[test]
    fn minmax_properties() {
        let (a, m) = pencil(32, 0.1);
        let r = solve_eigs(&a, &m, 5).unwrap();
        let top = minmax_upper(&a, &m, &r.eigenvectors[1..4]).unwrap();
        assert!((top - r.eigenvalues[3]).abs() < 1e-10 * r.eigenvalues[3]);
        let one = minmax_upper(&a, &m, &r.eigenvectors[2..3]).unwrap();
        assert!(one >= r.eigenvalues[1]);
        let dup = vec![r.eigenvectors[1].clone(), r.eigenvectors[1].clone()];
        assert_eq!(minmax_upper(&a, &m, &dup), Err(Error::DependentVectors));
        assert!(matches!(minmax_upper(&a, &m, &[vec![1.0; 33]]), Err(Error::NotMeanZero(_))));
    }

    #[test]
    fn c1_bound_behaviour() {
        let d = Domain::unit_interval();
        let lin = C1Function { field: ScalarField::new("x-1/2", 1.0, 1.0, |x: &[f64]| x[0] - 0.5), c1_norm: 1.5 };
        let v = [lin];
        let b = c1_subspace_bound(&v, &d, 0.4).unwrap();
        // 1.5^2 · 12 · 2 / (4 · 0.6)
        assert!((b - 22.5).abs() < 1e-9, "{b}");
        let mut prev = 0.0;
        for s0 in [0.0, 0.2, 0.4, 0.8, 0.99] {
            let b = c1_subspace_bound(&v, &d, s0).unwrap();
            assert!(b > prev && b.is_finite());
            prev = b;
        }
        for s in [0.0, 0.2, 0.4] {
            let (a, m) = pencil(32, s);
            assert!(solve_eigs(&a, &m, 2).unwrap().eigenvalues[1] <= 22.5);
        }
    }

    #[test]
    fn angles_and_clusters() {
        let (a, m) = pencil(16, 0.3);
        let r = solve_eigs(&a, &m, 6).unwrap();
        let same = principal_angles(&m, &r.eigenvectors[1..3], &r.eigenvectors[1..3]).unwrap();
        assert!(same.iter().all(|&t| t < 1e-6));
        let orth = principal_angles(&m, &r.eigenvectors[1..2], &r.eigenvectors[2..3]).unwrap();
        assert!((orth[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
        let cl = r.clusters(1e-8);
        assert_eq!(cl.len(), 6);
        let fake = SpectralResult { eigenvalues: vec![0.0, 1.0, 1.0 + 1e-12, 2.0], ..r.clone() };
        assert_eq!(fake.clusters(1e-8), vec![0..1, 1..3, 3..4]);
        assert_eq!(fake.cluster_of(2, 1e-8), 1..3);
    }

    #[test]
    fn json_shape() {
        let (a, m) = pencil(8, 0.2);
        let r = solve_eigs(&a, &m, 3).unwrap();
        let js = serde_json::to_value(&r).unwrap();
        assert_eq!(js["lambda"].as_array().unwrap().len(), 3);
        assert!(js.get("residuals").is_some() && js.get("mesh").is_some());
        assert_eq!(r.to_json_with_vectors()["vectors"].as_array().unwrap().len(), 3);
    }
}
