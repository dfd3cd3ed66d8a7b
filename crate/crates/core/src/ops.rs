//! Vector/operator abstractions shared by every solver.
//!
//! Solvers only ever see a [`LinearOperator`] (for `Ax = b`) or a
//! [`ResidualMap`] (for `F(x) = 0`). Jacobian-vector products of a residual
//! map are taken either from an exact hook or from a forward difference
//! quotient, see [`frechet_jvp`].

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Dense real vector used throughout the crate.
pub type Vector = DVector<f64>;

/// Dense real matrix.
pub type Matrix = DMatrix<f64>;

pub(crate) fn is_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

pub(crate) fn ensure_finite(v: &Vector, what: &'static str) -> Result<()> {
    if is_finite(v) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn ensure_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Builds a vector after rejecting NaN/Inf entries.
pub fn finite_vector(entries: &[f64]) -> Result<Vector> {
    let v = Vector::from_column_slice(entries);
    ensure_finite(&v, "vector construction")?;
    Ok(v)
}

/// Spectral structure tag carried by an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    SymmetricPositiveDefinite,
    SymmetricIndefinite,
    General,
    SkewLike,
}

impl Structure {
    pub fn is_symmetric(self) -> bool {
        matches!(
            self,
            Structure::SymmetricPositiveDefinite | Structure::SymmetricIndefinite
        )
    }
}

/// The matrix `A` of a linear system, accessed only through products.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;

    fn apply(&self, x: &Vector) -> Vector;

    fn structure(&self) -> Structure {
        Structure::General
    }

    /// Dense copy of the operator, when one is cheaply available.
    fn to_dense(&self) -> Option<Matrix> {
        None
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &Vector) -> Vector {
        (**self).apply(x)
    }
    fn structure(&self) -> Structure {
        (**self).structure()
    }
    fn to_dense(&self) -> Option<Matrix> {
        (**self).to_dense()
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &Vector) -> Vector {
        (**self).apply(x)
    }
    fn structure(&self) -> Structure {
        (**self).structure()
    }
    fn to_dense(&self) -> Option<Matrix> {
        (**self).to_dense()
    }
}

/// Operator backed by a dense square matrix.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    matrix: Matrix,
    structure: Structure,
}

impl DenseOperator {
    pub fn new(matrix: Matrix, structure: Structure) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dense operator"));
        }
        Ok(Self { matrix, structure })
    }

    pub fn general(matrix: Matrix) -> Result<Self> {
        Self::new(matrix, Structure::General)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: &Vector) -> Vector {
        &self.matrix * x
    }

    fn structure(&self) -> Structure {
        self.structure
    }

    fn to_dense(&self) -> Option<Matrix> {
        Some(self.matrix.clone())
    }
}

/// Compressed sparse row operator.
#[derive(Debug, Clone)]
pub struct CsrOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    structure: Structure,
}

impl CsrOperator {
    /// Builds a CSR operator from coordinate triples. Duplicate entries are summed.
    pub fn from_triplets(
        n: usize,
        triplets: &[(usize, usize, f64)],
        structure: Structure,
    ) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: i.max(j) + 1,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("csr entry"));
            }
            sorted.push((i, j, v));
        }
        sorted.sort_by_key(|&(i, j, _)| (i, j));

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
            last = Some((i, j));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
            structure,
        })
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates over stored `(row, col, value)` entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }
}

impl LinearOperator for CsrOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &Vector) -> Vector {
        let mut y = Vector::zeros(self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
        y
    }

    fn structure(&self) -> Structure {
        self.structure
    }

    fn to_dense(&self) -> Option<Matrix> {
        let mut m = Matrix::zeros(self.n, self.n);
        for (i, j, v) in self.entries() {
            m[(i, j)] += v;
        }
        Some(m)
    }
}

/// Largest observed `|<Au,w> - <u,Aw>| / (|u||w| |A|_est)` over random probes.
///
/// `|A|_est` is the largest `|Au|/|u|` seen while probing.
pub fn symmetry_defect<R: Rng + ?Sized>(op: &dyn LinearOperator, probes: usize, rng: &mut R) -> f64 {
    let n = op.dim();
    let mut worst: f64 = 0.0;
    let mut norm_est: f64 = 0.0;
    let mut samples = Vec::with_capacity(probes);
    for _ in 0..probes {
        let u = Vector::from_fn(n, |_, _| rng.sample(StandardNormal));
        let w = Vector::from_fn(n, |_, _| rng.sample(StandardNormal));
        let au = op.apply(&u);
        let aw = op.apply(&w);
        norm_est = norm_est.max(au.norm() / u.norm()).max(aw.norm() / w.norm());
        samples.push(((au.dot(&w) - u.dot(&aw)).abs(), u.norm() * w.norm()));
    }
    for (defect, scale) in samples {
        worst = worst.max(defect / (scale * norm_est.max(f64::MIN_POSITIVE)));
    }
    worst
}

/// A nonlinear map `F` whose root is sought.
pub trait ResidualMap: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &Vector) -> Vector;

    /// Exact Jacobian-vector product `J(x) u`, if the map provides one.
    fn jvp_exact(&self, _x: &Vector, _u: &Vector) -> Option<Vector> {
        None
    }

    fn has_exact_jvp(&self) -> bool {
        false
    }

    /// Scalar objective whose gradient is `F`, when `F` is a gradient map.
    fn objective(&self, _x: &Vector) -> Option<f64> {
        None
    }
}

impl<T: ResidualMap + ?Sized> ResidualMap for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &Vector) -> Vector {
        (**self).eval(x)
    }
    fn jvp_exact(&self, x: &Vector, u: &Vector) -> Option<Vector> {
        (**self).jvp_exact(x, u)
    }
    fn has_exact_jvp(&self) -> bool {
        (**self).has_exact_jvp()
    }
    fn objective(&self, x: &Vector) -> Option<f64> {
        (**self).objective(x)
    }
}

/// Wraps a residual map and counts evaluations and Jacobian products.
pub struct CountingMap<'a> {
    inner: &'a dyn ResidualMap,
    evals: AtomicU64,
    jvps: AtomicU64,
}

impl<'a> CountingMap<'a> {
    pub fn new(inner: &'a dyn ResidualMap) -> Self {
        Self {
            inner,
            evals: AtomicU64::new(0),
            jvps: AtomicU64::new(0),
        }
    }

    /// Number of `eval` calls so far.
    pub fn evals(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    /// Number of Jacobian-vector products (Frechet or exact) so far.
    pub fn jvps(&self) -> u64 {
        self.jvps.load(Ordering::Relaxed)
    }

    /// `J(x) u` through the exact hook when `exact` is set, else by Frechet
    /// difference reusing the cached `F(x)`.
    pub fn jvp(
        &self,
        x: &Vector,
        fx: &Vector,
        u: &Vector,
        exact: bool,
        policy: FrechetPolicy,
    ) -> Result<Vector> {
        self.jvps.fetch_add(1, Ordering::Relaxed);
        if exact {
            let v = self
                .inner
                .jvp_exact(x, u)
                .ok_or_else(|| Error::InvalidConfig("map has no exact jvp".into()))?;
            ensure_finite(&v, "exact jvp")?;
            Ok(v)
        } else {
            frechet_jvp(self, x, u, Some(fx), policy)
        }
    }
}

impl ResidualMap for CountingMap<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, x: &Vector) -> Vector {
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.inner.eval(x)
    }
    fn jvp_exact(&self, x: &Vector, u: &Vector) -> Option<Vector> {
        self.inner.jvp_exact(x, u)
    }
    fn has_exact_jvp(&self) -> bool {
        self.inner.has_exact_jvp()
    }
    fn objective(&self, x: &Vector) -> Option<f64> {
        self.inner.objective(x)
    }
}

/// `F(x) = A x - b` for a linear operator `A`.
pub struct AffineResidual<A> {
    pub op: A,
    pub rhs: Vector,
}

impl<A: LinearOperator> AffineResidual<A> {
    pub fn new(op: A, rhs: Vector) -> Result<Self> {
        ensure_dim(op.dim(), rhs.len())?;
        Ok(Self { op, rhs })
    }
}

impl<A: LinearOperator> ResidualMap for AffineResidual<A> {
    fn dim(&self) -> usize {
        self.op.dim()
    }
    fn eval(&self, x: &Vector) -> Vector {
        self.op.apply(x) - &self.rhs
    }
    fn jvp_exact(&self, _x: &Vector, u: &Vector) -> Option<Vector> {
        Some(self.op.apply(u))
    }
    fn has_exact_jvp(&self) -> bool {
        true
    }
}

/// Residual map built from closures; handy for small test problems.
pub struct FnResidual<F, J = fn(&Vector, &Vector) -> Vector> {
    dim: usize,
    f: F,
    jvp: Option<J>,
}

impl<F> FnResidual<F>
where
    F: Fn(&Vector) -> Vector + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f, jvp: None }
    }
}

impl<F, J> FnResidual<F, J>
where
    F: Fn(&Vector) -> Vector + Send + Sync,
    J: Fn(&Vector, &Vector) -> Vector + Send + Sync,
{
    pub fn with_jvp(dim: usize, f: F, jvp: J) -> Self {
        Self {
            dim,
            f,
            jvp: Some(jvp),
        }
    }
}

impl<F, J> ResidualMap for FnResidual<F, J>
where
    F: Fn(&Vector) -> Vector + Send + Sync,
    J: Fn(&Vector, &Vector) -> Vector + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &Vector) -> Vector {
        (self.f)(x)
    }
    fn jvp_exact(&self, x: &Vector, u: &Vector) -> Option<Vector> {
        self.jvp.as_ref().map(|j| j(x, u))
    }
    fn has_exact_jvp(&self) -> bool {
        self.jvp.is_some()
    }
}

/// How the finite-difference step of a Frechet product is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FrechetPolicy {
    /// `eps = sqrt(machine eps) * (1 + |x|) / |u|`, recomputed per call.
    #[default]
    Scaled,
    /// A fixed difference step.
    Fixed(f64),
}

impl FrechetPolicy {
    pub fn step(self, x: &Vector, u_norm: f64) -> f64 {
        match self {
            FrechetPolicy::Scaled => f64::EPSILON.sqrt() * (1.0 + x.norm()) / u_norm,
            FrechetPolicy::Fixed(eps) => eps,
        }
    }
}

/// Forward-difference approximation `(F(x + eps u) - F(x)) / eps` of `J(x) u`.
///
/// Uses one evaluation of `F` when `fx = F(x)` is supplied, two otherwise.
pub fn frechet_jvp<M: ResidualMap + ?Sized>(
    map: &M,
    x: &Vector,
    u: &Vector,
    fx: Option<&Vector>,
    policy: FrechetPolicy,
) -> Result<Vector> {
    ensure_dim(map.dim(), x.len())?;
    ensure_dim(map.dim(), u.len())?;
    let u_norm = u.norm();
    if u_norm == 0.0 {
        return Err(Error::ZeroDirection);
    }
    ensure_finite(x, "frechet base point")?;
    let eps = policy.step(x, u_norm);
    let shifted = x + u * eps;
    let f_shift = map.eval(&shifted);
    let v = match fx {
        Some(f0) => (f_shift - f0) / eps,
        None => (f_shift - map.eval(x)) / eps,
    };
    ensure_finite(&v, "frechet quotient")?;
    Ok(v)
}
