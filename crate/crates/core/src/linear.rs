//! Krylov solvers for `Ax = b`: truncated GCR, full GCR, CG and full GMRES,
//! plus a brute-force optimal-residual oracle over the Krylov space.

use crate::error::{Error, Result};
use crate::ops::{ensure_dim, ensure_finite, LinearOperator, Matrix, Vector};
use crate::trace::{default_store, Recorder, SolveTrace, StepCoefficient, Termination};
use crate::window::{window_orthonormalize, DirectionWindow, WindowMode};

/// Window size meaning "keep every direction".
pub const FULL_WINDOW: usize = usize::MAX;

/// Residuals growing beyond this multiple of `|r_0|` abort the solve.
const DIVERGENCE_FACTOR: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct LinearSolveConfig {
    /// Table size `m`; [`FULL_WINDOW`] for untruncated GCR.
    pub m: usize,
    pub max_iter: usize,
    pub rtol: f64,
    pub atol: f64,
    pub window_mode: WindowMode,
    /// Clear the window every this many iterations.
    pub restart_period: Option<usize>,
    /// Second Gram-Schmidt sweep during window updates.
    pub second_pass: bool,
    /// Keep every iterate in the trace; defaults to `dim <= 1024`.
    pub store_iterates: Option<bool>,
}

impl Default for LinearSolveConfig {
    fn default() -> Self {
        Self {
            m: 1,
            max_iter: 1000,
            rtol: 1e-10,
            atol: 0.0,
            window_mode: WindowMode::MovingWindow,
            restart_period: None,
            second_pass: false,
            store_iterates: None,
        }
    }
}

impl LinearSolveConfig {
    pub fn with_m(m: usize) -> Self {
        Self {
            m,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return Err(Error::InvalidConfig(format!("rtol {} not in (0, 1)", self.rtol)));
        }
        if !(self.atol >= 0.0) {
            return Err(Error::InvalidConfig(format!("atol {} negative", self.atol)));
        }
        if self.m == 0 {
            return Err(Error::InvalidConfig("m must be >= 1".into()));
        }
        if self.restart_period == Some(0) {
            return Err(Error::InvalidConfig("restart_period must be >= 1".into()));
        }
        Ok(())
    }

    fn tolerance(&self, r0: f64) -> f64 {
        self.atol.max(self.rtol * r0)
    }
}

struct Setup {
    x: Vector,
    r: Vector,
    r0: f64,
    tol: f64,
}

fn setup(
    name: &'static str,
    a: &dyn LinearOperator,
    b: &Vector,
    x0: &Vector,
    cfg: &LinearSolveConfig,
    trace: &mut SolveTrace,
    rec: &Recorder,
) -> Result<Setup> {
    cfg.validate()?;
    ensure_dim(a.dim(), b.len())?;
    ensure_dim(a.dim(), x0.len())?;
    ensure_finite(b, "right-hand side")?;
    ensure_finite(x0, "initial guess")?;
    let r = b - a.apply(x0);
    ensure_finite(&r, name)?;
    let r0 = r.norm();
    trace.dot_count += 1;
    rec.row(trace, x0, r0, None, 0, 1);
    Ok(Setup {
        x: x0.clone(),
        r,
        r0,
        tol: cfg.tolerance(r0),
    })
}

/// Truncated GCR with table size `cfg.m`.
///
/// Each step takes `alpha_j = (r_j, v_j)` along the newest direction and then
/// builds the next direction from `A r_{j+1}`, orthonormalized against the
/// last `m` images `v_i = A p_i`.
pub fn tgcr_solve(
    a: &dyn LinearOperator,
    b: &Vector,
    x0: &Vector,
    cfg: &LinearSolveConfig,
) -> Result<SolveTrace> {
    tgcr_solve_observed(a, b, x0, cfg, |_| {})
}

/// [`tgcr_solve`] calling `observe` on the window after every update.
pub fn tgcr_solve_observed(
    a: &dyn LinearOperator,
    b: &Vector,
    x0: &Vector,
    cfg: &LinearSolveConfig,
    mut observe: impl FnMut(&DirectionWindow),
) -> Result<SolveTrace> {
    let rec = Recorder::start();
    let mut trace = SolveTrace::new("tgcr", x0).store_iterates(default_store(a.dim(), cfg.store_iterates));
    let Setup { mut x, mut r, r0, tol } = setup("tgcr", a, b, x0, cfg, &mut trace, &rec)?;
    let mut matvecs = 1u64;
    if r0 <= tol {
        trace.termination = Termination::Converged;
        trace.x = x;
        return Ok(trace);
    }

    let mut window = DirectionWindow::new(cfg.m, cfg.window_mode)?.with_second_pass(cfg.second_pass);
    let v = a.apply(&r);
    matvecs += 1;
    match window_orthonormalize(&r, &v, &window) {
        Ok(out) => {
            trace.dot_count += out.dot_products as u64;
            window.push(out.p, out.v);
            observe(&window);
        }
        Err(Error::Breakdown { .. }) => {
            trace.termination = Termination::Breakdown;
            trace.matvec_count = matvecs;
            trace.x = x;
            return Ok(trace);
        }
        Err(e) => return Err(e),
    }

    for j in 0..cfg.max_iter {
        let newest = window.newest().expect("window holds the current direction");
        let alpha = r.dot(&newest.v);
        x.axpy(alpha, &newest.p, 1.0);
        r.axpy(-alpha, &newest.v, 1.0);
        let rn = r.norm();
        trace.dot_count += 2;
        if !rn.is_finite() {
            return Err(Error::NonFinite("tgcr residual"));
        }
        trace.coefficients.push(StepCoefficient::Scalar(alpha));
        rec.row(&mut trace, &x, rn, None, 0, matvecs);

        if rn <= tol {
            trace.termination = Termination::Converged;
            break;
        }
        if rn > DIVERGENCE_FACTOR * r0 {
            trace.termination = Termination::Diverged;
            break;
        }
        if j + 1 == cfg.max_iter {
            trace.termination = Termination::MaxIter;
            break;
        }
        if let Some(period) = cfg.restart_period {
            if (j + 1) % period == 0 {
                window.clear();
            }
        }

        let v = a.apply(&r);
        matvecs += 1;
        match window_orthonormalize(&r, &v, &window) {
            Ok(out) => {
                trace.dot_count += out.dot_products as u64;
                window.push(out.p, out.v);
                observe(&window);
            }
            Err(Error::Breakdown { .. }) => {
                trace.termination = Termination::Breakdown;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    trace.matvec_count = matvecs;
    trace.x = x;
    Ok(trace)
}

/// Untruncated GCR in its classical (unnormalized) form:
/// `alpha_j = (r_j, A p_j) / (A p_j, A p_j)` and
/// `beta_ij = (A r_{j+1}, A p_i) / (A p_i, A p_i)` against all previous directions.
pub fn gcr_solve(
    a: &dyn LinearOperator,
    b: &Vector,
    x0: &Vector,
    cfg: &LinearSolveConfig,
) -> Result<SolveTrace> {
    let rec = Recorder::start();
    let mut trace = SolveTrace::new("gcr", x0).store_iterates(default_store(a.dim(), cfg.store_iterates));
    let Setup { mut x, mut r, r0, tol } = setup("gcr", a, b, x0, cfg, &mut trace, &rec)?;
    let mut matvecs = 1u64;
    if r0 <= tol {
        trace.termination = Termination::Converged;
        trace.x = x;
        return Ok(trace);
    }

    let mut ps: Vec<Vector> = vec![r.clone()];
    let mut aps: Vec<Vector> = vec![a.apply(&r)];
    matvecs += 1;
    let mut ap_norms2: Vec<f64> = vec![aps[0].norm_squared()];
    trace.dot_count += 1;

    for j in 0..cfg.max_iter {
        let p = &ps[j];
        let ap = &aps[j];
        let alpha = r.dot(ap) / ap_norms2[j];
        x.axpy(alpha, p, 1.0);
        r.axpy(-alpha, ap, 1.0);
        let rn = r.norm();
        trace.dot_count += 2;
        if !rn.is_finite() {
            return Err(Error::NonFinite("gcr residual"));
        }
        trace.coefficients.push(StepCoefficient::Scalar(alpha));
        rec.row(&mut trace, &x, rn, None, 0, matvecs);

        if rn <= tol {
            trace.termination = Termination::Converged;
            break;
        }
        if rn > DIVERGENCE_FACTOR * r0 {
            trace.termination = Termination::Diverged;
            break;
        }
        if j + 1 == cfg.max_iter {
            trace.termination = Termination::MaxIter;
            break;
        }

        let ar = a.apply(&r);
        matvecs += 1;
        let mut p_new = r.clone();
        let mut ap_new = ar.clone();
        for i in 0..=j {
            let beta = ar.dot(&aps[i]) / ap_norms2[i];
            p_new.axpy(-beta, &ps[i], 1.0);
            ap_new.axpy(-beta, &aps[i], 1.0);
        }
        let norm2 = ap_new.norm_squared();
        trace.dot_count += j as u64 + 2;
        if norm2.sqrt() < 1e-14 * ar.norm().max(1.0) {
            trace.termination = Termination::Breakdown;
            break;
        }
        ps.push(p_new);
        aps.push(ap_new);
        ap_norms2.push(norm2);
    }
    trace.matvec_count = matvecs;
    trace.x = x;
    Ok(trace)
}

/// Textbook conjugate gradient. Non-positive curvature `(p, Ap) <= 0`
/// terminates with [`Termination::Breakdown`].
pub fn cg_solve(
    a: &dyn LinearOperator,
    b: &Vector,
    x0: &Vector,
    cfg: &LinearSolveConfig,
) -> Result<SolveTrace> {
    let rec = Recorder::start();
    let mut trace = SolveTrace::new("cg", x0).store_iterates(default_store(a.dim(), cfg.store_iterates));
    let Setup { mut x, mut r, r0, tol } = setup("cg", a, b, x0, cfg, &mut trace, &rec)?;
    let mut matvecs = 1u64;
    if r0 <= tol {
        trace.termination = Termination::Converged;
        trace.x = x;
        return Ok(trace);
    }
    let mut p = r.clone();
    let mut rr = r0 * r0;
    for j in 0..cfg.max_iter {
        let ap = a.apply(&p);
        matvecs += 1;
        let curvature = p.dot(&ap);
        trace.dot_count += 1;
        if !(curvature > 0.0) {
            trace.termination = Termination::Breakdown;
            break;
        }
        let alpha = rr / curvature;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rr_new = r.norm_squared();
        trace.dot_count += 1;
        let rn = rr_new.sqrt();
        if !rn.is_finite() {
            return Err(Error::NonFinite("cg residual"));
        }
        trace.coefficients.push(StepCoefficient::Scalar(alpha));
        rec.row(&mut trace, &x, rn, None, 0, matvecs);
        if rn <= tol {
            trace.termination = Termination::Converged;
            break;
        }
        if rn > DIVERGENCE_FACTOR * r0 {
            trace.termination = Termination::Diverged;
            break;
        }
        if j + 1 == cfg.max_iter {
            trace.termination = Termination::MaxIter;
            break;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        p = &r + p * beta;
    }
    trace.matvec_count = matvecs;
    trace.x = x;
    Ok(trace)
}

/// Full-memory GMRES: Arnoldi with modified Gram-Schmidt and Givens rotations.
///
/// The recorded residual norms are the least-squares residuals `|g_{k+1}|`.
/// A happy breakdown (invariant Krylov space) counts as convergence.
pub fn gmres_solve(
    a: &dyn LinearOperator,
    b: &Vector,
    x0: &Vector,
    cfg: &LinearSolveConfig,
) -> Result<SolveTrace> {
    let rec = Recorder::start();
    let store = default_store(a.dim(), cfg.store_iterates);
    let mut trace = SolveTrace::new("gmres", x0).store_iterates(store);
    let Setup { x, r, r0, tol } = setup("gmres", a, b, x0, cfg, &mut trace, &rec)?;
    let mut matvecs = 1u64;
    if r0 <= tol {
        trace.termination = Termination::Converged;
        trace.x = x;
        return Ok(trace);
    }

    let n = a.dim();
    let max_k = cfg.max_iter.min(n);
    let mut basis: Vec<Vector> = vec![r / r0];
    // Column k of the (rotated) Hessenberg matrix, length k + 2.
    let mut h_cols: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut g = vec![r0];

    let solve_x = |h_cols: &Vec<Vec<f64>>, g: &Vec<f64>, basis: &Vec<Vector>| -> Vector {
        let k = h_cols.len();
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for (l, yl) in y.iter().enumerate().take(k).skip(i + 1) {
                s -= h_cols[l][i] * yl;
            }
            y[i] = s / h_cols[i][i];
        }
        let mut xk = x.clone();
        for (yi, vi) in y.iter().zip(basis.iter()) {
            xk.axpy(*yi, vi, 1.0);
        }
        xk
    };

    let mut termination = Termination::MaxIter;
    for k in 0..max_k {
        let mut w = a.apply(&basis[k]);
        matvecs += 1;
        let w_norm0 = w.norm();
        let mut h = vec![0.0; k + 2];
        for (i, vi) in basis.iter().enumerate() {
            h[i] = w.dot(vi);
            w.axpy(-h[i], vi, 1.0);
        }
        h[k + 1] = w.norm();
        trace.dot_count += k as u64 + 3;
        for i in 0..k {
            let t = cs[i] * h[i] + sn[i] * h[i + 1];
            h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
            h[i] = t;
        }
        let happy = h[k + 1] <= 1e-14 * w_norm0.max(f64::MIN_POSITIVE);
        let denom = h[k].hypot(h[k + 1]);
        let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (h[k] / denom, h[k + 1] / denom) };
        let sub = h[k + 1];
        h[k] = c * h[k] + s * sub;
        h[k + 1] = 0.0;
        cs.push(c);
        sn.push(s);
        let gk = g[k];
        g[k] = c * gk;
        g.push(-s * gk);
        h_cols.push(h);
        let rn = g[k + 1].abs();
        if !rn.is_finite() {
            return Err(Error::NonFinite("gmres residual"));
        }
        if !happy {
            basis.push(w / sub);
        }
        let xk = if store || happy || rn <= tol || k + 1 == max_k {
            solve_x(&h_cols, &g, &basis)
        } else {
            x.clone()
        };
        rec.row(&mut trace, &xk, rn, None, 0, matvecs);
        trace.x = xk;
        if rn <= tol || happy {
            termination = Termination::Converged;
            break;
        }
    }
    trace.termination = termination;
    trace.matvec_count = matvecs;
    Ok(trace)
}

/// Minimum of `|f(A) r0|` over polynomials `f` of degree `<= k` with `f(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptimum {
    pub residual: f64,
    /// Numerical rank of `A K_k(A, r0)`.
    pub rank: usize,
    /// True when the rank is below `k`; `residual` is then the exact minimum
    /// over the degenerate space.
    pub rank_deficient: bool,
}

/// Brute-force optimal Krylov residual built from the monomial basis
/// `[A r0, A^2 r0, ..., A^k r0]` (columns normalized), a pivoted QR
/// factorization and an exact projection of `r0`.
///
/// Requires a dense copy of `A` only through `apply`; cost `O(k n^2)`.
pub fn krylov_optimal_residual(a: &dyn LinearOperator, r0: &Vector, k: usize) -> Result<KrylovOptimum> {
    let n = a.dim();
    ensure_dim(n, r0.len())?;
    if k > n {
        return Err(Error::InvalidConfig(format!("k = {k} exceeds dimension {n}")));
    }
    let r_norm = r0.norm();
    if k == 0 || r_norm == 0.0 {
        return Ok(KrylovOptimum {
            residual: r_norm,
            rank: 0,
            rank_deficient: false,
        });
    }
    // Orthonormal basis of K_k(A, r0), built with repeated classical
    // Gram-Schmidt; the monomial basis is too ill-conditioned near k = n.
    let mut basis: Vec<Vector> = vec![r0 / r_norm];
    while basis.len() < k {
        let mut w = a.apply(basis.last().unwrap());
        let before = w.norm();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let wn = w.norm();
        if wn <= 1e-13 * before {
            break;
        }
        basis.push(w / wn);
    }
    let mut cols = Vec::with_capacity(basis.len());
    for q in &basis {
        let w = a.apply(q);
        if w.norm() == 0.0 {
            break;
        }
        cols.push(w);
    }
    let qr = Matrix::from_columns(&cols).col_piv_qr();
    let rmat = qr.r();
    let lead = rmat[(0, 0)].abs();
    let rank = (0..cols.len())
        .take_while(|&i| rmat[(i, i)].abs() > 1e-13 * lead)
        .count();
    let q = qr.q();
    let q_r = q.columns(0, rank);
    let coeffs = q_r.transpose() * r0;
    let resid = r0 - q_r * coeffs;
    Ok(KrylovOptimum {
        residual: resid.norm(),
        rank,
        rank_deficient: rank < k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{DenseOperator, Structure};

    fn diag(entries: &[f64]) -> DenseOperator {
        DenseOperator::new(
            Matrix::from_diagonal(&Vector::from_column_slice(entries)),
            Structure::SymmetricPositiveDefinite,
        )
        .unwrap()
    }

    fn v(entries: &[f64]) -> Vector {
        Vector::from_column_slice(entries)
    }

    #[test]
    fn identity_converges_in_one_step() {
        let a = diag(&[1.0; 5]);
        let b = v(&[1.0, -2.0, 3.0, 0.5, 4.0]);
        let x0 = Vector::zeros(5);
        let cfg = LinearSolveConfig::default();
        for solve in [tgcr_solve, gcr_solve, cg_solve, gmres_solve] {
            let t = solve(&a, &b, &x0, &cfg).unwrap();
            assert_eq!(t.iterations(), 1, "{}", t.solver);
            assert!(t.converged());
            assert!((&t.x - &b).norm() <= 1e-12);
            assert!(t.final_residual() <= 1e-12);
        }
    }

    #[test]
    fn tgcr_two_steps_on_diag() {
        let a = diag(&[1.0, 2.0]);
        let b = v(&[1.0, 1.0]);
        let cfg = LinearSolveConfig {
            rtol: 1e-14,
            ..LinearSolveConfig::default()
        };
        let t = tgcr_solve(&a, &b, &Vector::zeros(2), &cfg).unwrap();
        let its = t.iterates.as_ref().unwrap();
        assert!((&its[1] - v(&[0.6, 0.6])).norm() < 1e-15);
        assert!((t.residual_norms[1] - 0.2f64.sqrt()).abs() < 1e-15);
        assert!((&its[2] - v(&[1.0, 0.5])).norm() < 1e-14);
        assert!(t.residual_norms[2] <= 1e-12);
        assert_eq!(t.matvec_count, 1 + t.iterations() as u64);
    }

    #[test]
    fn cg_terminates_in_two_steps_on_two_eigenvalues() {
        let a = diag(&[1.0, 2.0]);
        let t = cg_solve(&a, &v(&[1.0, 1.0]), &Vector::zeros(2), &LinearSolveConfig::default()).unwrap();
        assert_eq!(t.iterations(), 2);
        assert!((&t.x - v(&[1.0, 0.5])).norm() < 1e-12);
    }

    #[test]
    fn cg_breaks_down_on_negative_curvature() {
        let a = DenseOperator::new(
            Matrix::from_diagonal(&v(&[-1.0, 1.0, 2.0, 3.0])),
            Structure::SymmetricIndefinite,
        )
        .unwrap();
        let b = v(&[1.0, 0.1, 0.1, 0.1]);
        let cg = cg_solve(&a, &b, &Vector::zeros(4), &LinearSolveConfig::default()).unwrap();
        assert_eq!(cg.termination, Termination::Breakdown);
        let tg = tgcr_solve(&a, &b, &Vector::zeros(4), &LinearSolveConfig::default()).unwrap();
        assert!(tg.converged());
    }

    #[test]
    fn optimal_residual_small_cases() {
        let a = diag(&[1.0, 2.0]);
        let r0 = v(&[1.0, 1.0]);
        assert_eq!(krylov_optimal_residual(&a, &r0, 0).unwrap().residual, 2f64.sqrt());
        // min_alpha |(I - alpha A) r0| = sqrt(0.2) at alpha = 3/5
        let one = krylov_optimal_residual(&a, &r0, 1).unwrap();
        assert!((one.residual - 0.2f64.sqrt()).abs() < 1e-15);
        let id = diag(&[1.0; 3]);
        for k in 1..=3 {
            let opt = krylov_optimal_residual(&id, &v(&[1.0, 2.0, 3.0]), k).unwrap();
            assert!(opt.residual < 1e-14);
            assert_eq!(opt.rank_deficient, k > 1);
        }
        assert!(krylov_optimal_residual(&id, &v(&[1.0, 2.0, 3.0]), 4).is_err());
    }

    #[test]
    fn invalid_config_rejected() {
        let a = diag(&[1.0, 2.0]);
        let b = v(&[1.0, 1.0]);
        for cfg in [
            LinearSolveConfig { rtol: 1.5, ..Default::default() },
            LinearSolveConfig { rtol: 0.0, ..Default::default() },
            LinearSolveConfig { atol: -1.0, ..Default::default() },
            LinearSolveConfig { m: 0, ..Default::default() },
        ] {
            assert!(matches!(
                tgcr_solve(&a, &b, &Vector::zeros(2), &cfg),
                Err(Error::InvalidConfig(_))
            ));
        }
        assert!(matches!(
            tgcr_solve(&a, &v(&[1.0]), &Vector::zeros(2), &LinearSolveConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn restart_mode_still_converges() {
        let a = diag(&[1.0, 2.0, 3.0, 5.0, 8.0]);
        let b = v(&[1.0, 1.0, 1.0, 1.0, 1.0]);
        let cfg = LinearSolveConfig {
            m: 3,
            window_mode: WindowMode::Restart,
            restart_period: Some(2),
            ..Default::default()
        };
        let t = tgcr_solve(&a, &b, &Vector::zeros(5), &cfg).unwrap();
        assert!(t.converged());
    }
}
