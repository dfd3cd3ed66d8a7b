//! Anderson acceleration AA(m) for residuals `F(x) = H(x) - x`.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::ops::{ensure_dim, ensure_finite, CountingMap, Matrix, ResidualMap, Vector};
use crate::trace::{default_store, Recorder, SolveTrace, StepCoefficient, StepRecord, Termination};

const DIVERGENCE_FACTOR: f64 = 1e8;
/// Pivots below this fraction of the largest one mark `F` as rank deficient.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct AndersonConfig {
    pub m: usize,
    /// Mixing parameter; 1 for plain fixed-point form.
    pub beta: f64,
    pub max_iter: usize,
    pub rtol: f64,
    pub atol: f64,
    pub store_iterates: Option<bool>,
}

impl Default for AndersonConfig {
    fn default() -> Self {
        Self {
            m: 5,
            beta: 1.0,
            max_iter: 500,
            rtol: 1e-6,
            atol: 0.0,
            store_iterates: None,
        }
    }
}

impl AndersonConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidConfig("m must be >= 1".into()));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::InvalidConfig(format!("beta {} negative", self.beta)));
        }
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return Err(Error::InvalidConfig(format!("rtol {} not in (0, 1)", self.rtol)));
        }
        if !(self.atol >= 0.0) {
            return Err(Error::InvalidConfig(format!("atol {} negative", self.atol)));
        }
        Ok(())
    }
}

/// Difference history `X = [dx_{j-m} ... dx_{j-1}]`, `F = [df_{j-m} ... df_{j-1}]`.
#[derive(Debug, Clone)]
pub struct AaHistory {
    capacity: usize,
    pub beta: f64,
    dx: VecDeque<Vector>,
    df: VecDeque<Vector>,
}

impl AaHistory {
    pub fn new(capacity: usize, beta: f64) -> Self {
        Self {
            capacity,
            beta,
            dx: VecDeque::new(),
            df: VecDeque::new(),
        }
    }

    /// Appends a column pair, dropping the oldest beyond capacity.
    pub fn push(&mut self, dx: Vector, df: Vector) {
        assert_eq!(dx.len(), df.len(), "difference lengths");
        if self.dx.len() == self.capacity {
            self.dx.pop_front();
            self.df.pop_front();
        }
        self.dx.push_back(dx);
        self.df.push_back(df);
    }

    pub fn len(&self) -> usize {
        self.dx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dx.is_empty()
    }

    pub fn clear(&mut self) {
        self.dx.clear();
        self.df.clear();
    }

    pub fn x_matrix(&self) -> Matrix {
        columns(&self.dx)
    }

    pub fn f_matrix(&self) -> Matrix {
        columns(&self.df)
    }
}

fn columns(cols: &VecDeque<Vector>) -> Matrix {
    if cols.is_empty() {
        return Matrix::zeros(0, 0);
    }
    let slice: Vec<Vector> = cols.iter().cloned().collect();
    Matrix::from_columns(&slice)
}

/// `argmin |f - A theta|` by pivoted QR; rank-deficient `A` falls back to
/// the minimum-norm SVD solution.
pub(crate) fn least_squares(a: &Matrix, f: &Vector) -> Vector {
    let k = a.ncols();
    if k == 0 {
        return Vector::zeros(0);
    }
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let lead = r[(0, 0)].abs();
    let full_rank = k <= a.nrows() && lead > 0.0 && (0..k).all(|i| r[(i, i)].abs() > RANK_TOL * lead);
    if full_rank {
        let rhs = qr.q().transpose() * f;
        if let Some(mut theta) = r.solve_upper_triangular(&rhs) {
            qr.p().inv_permute_rows(&mut theta);
            if theta.iter().all(|t| t.is_finite()) {
                return theta;
            }
        }
    }
    let svd = a.clone().svd(true, true);
    let cutoff = RANK_TOL * svd.singular_values.max();
    svd.solve(f, cutoff).unwrap_or_else(|_| Vector::zeros(k))
}

/// AA(m): `x_{j+1} = x_j + beta F_j - (X_j + beta F_j) theta_j` with
/// `theta_j = argmin |F_j - F_j theta|` over the last `m` differences.
/// The first step is `x_1 = x_0 + beta F_0`.
///
/// `steps[j].model_residual` holds the least-squares residual `|F_j - F theta|`.
pub fn aa_solve(map: &dyn ResidualMap, x0: &Vector, cfg: &AndersonConfig) -> Result<SolveTrace> {
    aa_solve_with_history(map, x0, cfg).map(|(trace, _)| trace)
}

/// [`aa_solve`] that also returns the final difference history.
pub fn aa_solve_with_history(
    map: &dyn ResidualMap,
    x0: &Vector,
    cfg: &AndersonConfig,
) -> Result<(SolveTrace, AaHistory)> {
    cfg.validate()?;
    ensure_dim(map.dim(), x0.len())?;
    ensure_finite(x0, "initial guess")?;
    let counting = CountingMap::new(map);
    let rec = Recorder::start();
    let mut trace = SolveTrace::new("aa", x0).store_iterates(default_store(x0.len(), cfg.store_iterates));
    let mut history = AaHistory::new(cfg.m, cfg.beta);

    let mut x = x0.clone();
    let mut f = counting.eval(&x);
    ensure_finite(&f, "initial residual")?;
    let f0_norm = f.norm();
    let tol = cfg.atol.max(cfg.rtol * f0_norm);
    rec.row(&mut trace, &x, f0_norm, map.objective(&x), counting.evals(), 0);
    trace.dot_count += 1;
    trace.termination = if f0_norm <= tol { Termination::Converged } else { Termination::MaxIter };

    let mut theta = Vector::zeros(0);
    let mut ls_residual = f0_norm;
    for _ in 0..cfg.max_iter {
        if trace.termination != Termination::MaxIter {
            break;
        }
        let mut x_new = &x + &f * cfg.beta;
        if !history.is_empty() {
            let xm = history.x_matrix();
            let fm = history.f_matrix();
            x_new -= (xm + fm * cfg.beta) * &theta;
        }
        let f_new = counting.eval(&x_new);
        ensure_finite(&f_new, "anderson residual")?;
        let f_norm = f_new.norm();
        trace.steps.push(StepRecord {
            y: theta.clone(),
            delta: &x_new - &x,
            model_residual: Some(ls_residual),
            residual_check_pass: true,
            linesearch_backtracks: 0,
            step_length: 1.0,
            safeguard_taken: false,
            phi_before: 0.0,
            phi_after: 0.0,
        });
        trace.coefficients.push(StepCoefficient::Vector(theta.clone()));
        history.push(&x_new - &x, &f_new - &f);
        x = x_new;
        f = f_new;
        rec.row(&mut trace, &x, f_norm, map.objective(&x), counting.evals(), 0);

        if f_norm <= tol {
            trace.termination = Termination::Converged;
            break;
        }
        if f_norm > DIVERGENCE_FACTOR * f0_norm {
            trace.termination = Termination::Diverged;
            break;
        }
        let fm = history.f_matrix();
        theta = least_squares(&fm, &f);
        if !theta.iter().all(|t| t.is_finite()) {
            history.clear();
            theta = Vector::zeros(0);
            ls_residual = f_norm;
        } else {
            ls_residual = (&f - fm * &theta).norm();
        }
        let k = history.len() as u64;
        trace.dot_count += k * k + k + 2;
    }
    let phis: Vec<f64> = trace.residual_norms.iter().map(|r| 0.5 * r * r).collect();
    for (i, step) in trace.steps.iter_mut().enumerate() {
        step.phi_before = phis[i];
        step.phi_after = phis[i + 1];
    }
    trace.x = x;
    trace.feval_count = counting.evals();
    Ok((trace, history))
}

/// `G = X (F^T F)^{-1} F^T`, through the pseudo-inverse of `F` when rank deficient.
/// An empty history gives the zero matrix of size `dim`.
pub fn aa_multisecant_matrix(history: &AaHistory, dim: usize) -> Matrix {
    if history.is_empty() {
        return Matrix::zeros(dim, dim);
    }
    let fm = history.f_matrix();
    let svd = fm.svd(true, true);
    let cutoff = RANK_TOL * svd.singular_values.max();
    let pinv = svd.pseudo_inverse(cutoff).expect("u and v computed");
    history.x_matrix() * pinv
}

/// Fixed-point residual `F(x) = -step R(x)` of the relaxation `x - step R(x)`
/// for a root-finding map `R`, e.g. gradient descent on `R = grad f`.
/// The objective of `R` passes through.
pub struct FixedPointForm<'a> {
    pub map: &'a dyn ResidualMap,
    pub step: f64,
}

impl ResidualMap for FixedPointForm<'_> {
    fn dim(&self) -> usize {
        self.map.dim()
    }
    fn eval(&self, x: &Vector) -> Vector {
        self.map.eval(x) * -self.step
    }
    fn objective(&self, x: &Vector) -> Option<f64> {
        self.map.objective(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::FnResidual;

    fn v(entries: &[f64]) -> Vector {
        Vector::from_column_slice(entries)
    }

    #[test]
    fn constant_map_converges_in_one_step() {
        let c = v(&[1.0, 2.0, -3.0]);
        let cc = c.clone();
        let map = FnResidual::new(3, move |x: &Vector| &cc - x);
        let t = aa_solve(&map, &v(&[5.0, 5.0, 5.0]), &AndersonConfig::default()).unwrap();
        assert_eq!(t.iterations(), 1);
        assert!(t.converged());
        assert!((&t.x - &c).norm() < 1e-15);
    }

    #[test]
    fn scalar_hand_example() {
        let map = FnResidual::new(1, |x: &Vector| v(&[1.0 - 2.0 * x[0]]));
        let cfg = AndersonConfig {
            m: 1,
            rtol: 1e-12,
            ..Default::default()
        };
        let t = aa_solve(&map, &v(&[0.0]), &cfg).unwrap();
        let its = t.iterates.as_ref().unwrap();
        assert_eq!(its[1][0], 1.0);
        assert!((its[2][0] - 0.5).abs() < 1e-15);
        assert!(t.converged());
        match &t.coefficients[1] {
            StepCoefficient::Vector(theta) => assert!((theta[0] - 0.5).abs() < 1e-15),
            other => panic!("unexpected coefficient {other:?}"),
        }
    }

    #[test]
    fn multisecant_single_column() {
        let mut h = AaHistory::new(3, 0.0);
        h.push(v(&[1.0, 0.0]), v(&[2.0, 0.0]));
        let g = aa_multisecant_matrix(&h, 2);
        let expected = Matrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]);
        assert!((g - expected).norm() < 1e-15);
    }

    #[test]
    fn multisecant_equal_columns_act_as_identity() {
        let mut h = AaHistory::new(3, 0.0);
        h.push(v(&[1.0, 2.0, 0.0]), v(&[1.0, 2.0, 0.0]));
        h.push(v(&[0.0, 1.0, 1.0]), v(&[0.0, 1.0, 1.0]));
        let g = aa_multisecant_matrix(&h, 3);
        let fm = h.f_matrix();
        assert!((&g * &fm - &fm).norm() < 1e-12);
        assert!((&g * v(&[2.0, -1.0, 1.0])).norm() < 1e-12);
    }

    #[test]
    fn empty_history_gives_zero() {
        let h = AaHistory::new(2, 1.0);
        assert_eq!(aa_multisecant_matrix(&h, 4), Matrix::zeros(4, 4));
    }

    #[test]
    fn least_squares_handles_rank_deficiency() {
        let a = Matrix::from_columns(&[v(&[1.0, 0.0, 0.0]), v(&[2.0, 0.0, 0.0])]);
        let theta = least_squares(&a, &v(&[5.0, 1.0, 0.0]));
        // Minimum-norm solution of theta_1 + 2 theta_2 = 5.
        assert!((theta - v(&[1.0, 2.0])).norm() < 1e-12);
        let b = Matrix::from_columns(&[v(&[1.0, 1.0, 0.0]), v(&[0.0, 1.0, 1.0])]);
        let theta = least_squares(&b, &v(&[1.0, 2.0, 1.0]));
        assert!((theta - v(&[1.0, 1.0])).norm() < 1e-12);
    }

    #[test]
    fn history_evicts_oldest() {
        let mut h = AaHistory::new(2, 1.0);
        for k in 0..3 {
            h.push(v(&[k as f64]), v(&[k as f64]));
        }
        assert_eq!(h.x_matrix(), Matrix::from_row_slice(1, 2, &[1.0, 2.0]));
    }
}
