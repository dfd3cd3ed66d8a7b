use crate::error::{Error, Result};
use crate::ops::{ensure_dim, ensure_finite, CountingMap, FrechetPolicy, ResidualMap, Vector};
use crate::trace::{default_store, Recorder, SolveTrace, StepCoefficient, StepRecord, Termination};
use crate::window::{window_orthonormalize, DirectionWindow};

use super::{backtracking_linesearch, NonlinearSolveConfig, OnFail, UpdateMode};

const DIVERGENCE_FACTOR: f64 = 1e8;

/// Source of residuals and Jacobian products for the nlTGCR engine.
///
/// `resample` is called once before each new iterate is evaluated, so
/// stochastic oracles draw fresh batches per iteration.
pub(crate) trait Oracle {
    fn dim(&self) -> usize;
    fn eval(&mut self, x: &Vector) -> Vector;
    /// `J(x) u`, with `fx = F(x)` from the same batch.
    fn jvp(&mut self, x: &Vector, fx: &Vector, u: &Vector) -> Result<Vector>;
    fn objective(&self, x: &Vector) -> Option<f64>;
    fn fevals(&self) -> u64;
    fn matvecs(&self) -> u64;
    fn resample(&mut self, _iteration: usize) {}
    fn batch_sizes(&self) -> Option<(usize, usize)> {
        None
    }
}

/// Deterministic oracle over a [`ResidualMap`].
pub(crate) struct MapOracle<'a> {
    map: CountingMap<'a>,
    exact: bool,
    policy: FrechetPolicy,
    exact_jvps: u64,
}

impl<'a> MapOracle<'a> {
    pub(crate) fn new(map: &'a dyn ResidualMap, cfg: &NonlinearSolveConfig) -> Result<Self> {
        if cfg.use_exact_jvp && !map.has_exact_jvp() {
            return Err(Error::InvalidConfig("use_exact_jvp set but the map has no exact jvp".into()));
        }
        Ok(Self {
            map: CountingMap::new(map),
            exact: cfg.use_exact_jvp,
            policy: cfg.frechet,
            exact_jvps: 0,
        })
    }
}

impl Oracle for MapOracle<'_> {
    fn dim(&self) -> usize {
        self.map.dim()
    }
    fn eval(&mut self, x: &Vector) -> Vector {
        self.map.eval(x)
    }
    fn jvp(&mut self, x: &Vector, fx: &Vector, u: &Vector) -> Result<Vector> {
        if self.exact {
            self.exact_jvps += 1;
        }
        self.map.jvp(x, fx, u, self.exact, self.policy)
    }
    fn objective(&self, x: &Vector) -> Option<f64> {
        self.map.objective(x)
    }
    fn fevals(&self) -> u64 {
        self.map.evals()
    }
    fn matvecs(&self) -> u64 {
        self.exact_jvps
    }
}

/// `y = V^T r`, or the least-squares solution of `min |r - V y|` on request.
fn coefficients(window: &DirectionWindow, r: &Vector, least_squares: bool) -> Vector {
    if least_squares && !window.is_empty() {
        let v = window.v_matrix();
        if let Ok(y) = v.svd(true, true).solve(r, 1e-14) {
            return y;
        }
    }
    window.project(r)
}

/// nlTGCR run one iteration at a time, exposing the live direction window.
///
/// [`nltgcr_solve`] drives this to completion; stepping manually is useful for
/// inspecting `(p_j, v_j)` pairs between iterations.
pub struct NltgcrSolver<'a> {
    oracle: Box<dyn Oracle + 'a>,
    cfg: NonlinearSolveConfig,
    window: DirectionWindow,
    x: Vector,
    x_prev: Option<Vector>,
    fx: Vector,
    f_norm: f64,
    f0_norm: f64,
    tol: f64,
    iter: usize,
    safeguards_in_row: usize,
    trace: SolveTrace,
    rec: Recorder,
    done: Option<Termination>,
}

impl<'a> NltgcrSolver<'a> {
    /// Evaluates `F(x0)` and builds the first direction.
    pub fn new(map: &'a dyn ResidualMap, x0: &Vector, cfg: &NonlinearSolveConfig) -> Result<Self> {
        if cfg.update_mode != UpdateMode::Nonlinear {
            return Err(Error::InvalidConfig(
                "linearized update runs through nltgcr_linearized_solve".into(),
            ));
        }
        let oracle = MapOracle::new(map, cfg)?;
        Self::with_oracle(Box::new(oracle), x0, cfg, "nltgcr")
    }

    pub(crate) fn with_oracle(
        mut oracle: Box<dyn Oracle + 'a>,
        x0: &Vector,
        cfg: &NonlinearSolveConfig,
        name: &str,
    ) -> Result<Self> {
        cfg.validate()?;
        ensure_dim(oracle.dim(), x0.len())?;
        ensure_finite(x0, "initial guess")?;
        oracle.resample(0);
        let fx = oracle.eval(x0);
        ensure_finite(&fx, "initial residual")?;
        let f_norm = fx.norm();
        let store = default_store(x0.len(), cfg.store_iterates);
        let window = DirectionWindow::new(cfg.m, cfg.window_mode)?.with_second_pass(cfg.second_pass);
        let mut solver = Self {
            oracle,
            cfg: cfg.clone(),
            window,
            x: x0.clone(),
            x_prev: None,
            fx,
            f_norm,
            f0_norm: f_norm,
            tol: cfg.atol.max(cfg.rtol * f_norm),
            iter: 0,
            safeguards_in_row: 0,
            trace: SolveTrace::new(name, x0).store_iterates(store),
            rec: Recorder::start(),
            done: None,
        };
        solver.trace.dot_count += 1;
        solver.record_row();
        if let Some(b) = solver.oracle.batch_sizes() {
            solver.trace.batch_sizes.push(b);
        }
        if solver.f_norm <= solver.tol {
            solver.done = Some(Termination::Converged);
        } else {
            solver.new_direction()?;
        }
        Ok(solver)
    }

    pub fn x(&self) -> &Vector {
        &self.x
    }

    /// `F` at the current iterate.
    pub fn residual(&self) -> &Vector {
        &self.fx
    }

    pub fn window(&self) -> &DirectionWindow {
        &self.window
    }

    pub fn iterations(&self) -> usize {
        self.iter
    }

    pub fn trace(&self) -> &SolveTrace {
        &self.trace
    }

    pub fn termination(&self) -> Option<Termination> {
        self.done
    }

    pub fn into_trace(mut self) -> SolveTrace {
        self.trace.x = self.x;
        self.trace.termination = self.done.unwrap_or(Termination::MaxIter);
        self.trace.feval_count = self.oracle.fevals();
        self.trace.matvec_count = self.oracle.matvecs();
        self.trace
    }

    fn record_row(&mut self) {
        let objective = self.oracle.objective(&self.x);
        let (fevals, matvecs) = (self.oracle.fevals(), self.oracle.matvecs());
        self.rec
            .row(&mut self.trace, &self.x, self.f_norm, objective, fevals, matvecs);
    }

    /// Adds the direction built from `r = -F(x)`; a breakdown against a
    /// nonempty window retries once against an empty one.
    fn new_direction(&mut self) -> Result<()> {
        let r = -&self.fx;
        let v = self.oracle.jvp(&self.x, &self.fx, &r)?;
        let out = match window_orthonormalize(&r, &v, &self.window) {
            Err(Error::Breakdown { .. }) if !self.window.is_empty() => {
                self.window.clear();
                window_orthonormalize(&r, &v, &self.window)
            }
            other => other,
        };
        match out {
            Ok(out) => {
                self.trace.dot_count += out.dot_products as u64;
                self.window.push(out.p, out.v);
                Ok(())
            }
            Err(Error::Breakdown { .. }) => {
                self.done = Some(Termination::Breakdown);
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    /// One iteration; returns the termination reason once the solve is over.
    pub fn step(&mut self) -> Result<Option<Termination>> {
        if self.done.is_some() {
            return Ok(self.done);
        }
        let cfg = &self.cfg;
        let r = -&self.fx;
        let y = coefficients(&self.window, &r, cfg.solve_least_squares);
        let delta = self.window.combine_p(&y);
        let model = self.window.combine_v(&y);
        let phi_before = 0.5 * self.f_norm * self.f_norm;
        self.trace.dot_count += self.window.len() as u64;

        let check = cfg.residual_check.map(|rc| {
            let lhs = (&self.fx + &model).norm();
            (lhs <= rc.eta_at(self.f_norm) * self.f_norm, lhs, rc.on_fail)
        });
        let mut safeguard = y.iter().all(|&c| c == 0.0) || delta.norm() == 0.0;
        let mut use_ls = cfg.line_search.is_some();
        if let Some((false, _, on_fail)) = check {
            self.trace.dot_count += 1;
            match on_fail {
                OnFail::LineSearch => use_ls = true,
                OnFail::SafeguardRestart => safeguard = true,
                OnFail::Ignore => {}
            }
        }

        self.oracle.resample(self.iter + 1);
        let mut backtracks = 0;
        let mut step_length = 1.0;
        let mut next: Option<(Vector, Vector)> = None;
        if !safeguard && use_ls {
            let params = cfg.line_search.unwrap_or_default();
            // <F, J delta> through the linear model J P y ~ V y.
            let grad_dot_p = self.fx.dot(&model);
            let mut last = None;
            let oracle = &mut self.oracle;
            let outcome = backtracking_linesearch(
                |z| {
                    let f = oracle.eval(z);
                    let phi = 0.5 * f.norm_squared();
                    last = Some(f);
                    Ok(phi)
                },
                phi_before,
                grad_dot_p,
                &self.x,
                &delta,
                &params,
            );
            match outcome {
                Ok(out) => {
                    backtracks = out.backtracks;
                    step_length = out.step;
                    let f_new = last.expect("line search evaluated the accepted point");
                    next = Some((&self.x + &delta * out.step, f_new));
                }
                Err(Error::NotDescent(_)) | Err(Error::LineSearchFailed(_)) => safeguard = true,
                Err(e) => return Err(e),
            }
        } else if !safeguard {
            let mut x_new = &self.x + &delta;
            if let (Some(mu), Some(prev)) = (cfg.momentum, &self.x_prev) {
                x_new += (&self.x - prev) * mu;
            }
            let f_new = self.oracle.eval(&x_new);
            next = Some((x_new, f_new));
        }
        if safeguard {
            self.window.clear();
            self.safeguards_in_row += 1;
            step_length = cfg.safeguard_step;
            let x_new = &self.x - &self.fx * cfg.safeguard_step;
            let f_new = self.oracle.eval(&x_new);
            next = Some((x_new, f_new));
        } else {
            self.safeguards_in_row = 0;
        }
        let (x_new, f_new) = next.expect("every branch produces an iterate");
        ensure_finite(&f_new, "nltgcr residual")?;

        let f_norm = f_new.norm();
        self.trace.dot_count += 1;
        self.trace.steps.push(StepRecord {
            y: y.clone(),
            delta,
            model_residual: check.map(|c| c.1),
            residual_check_pass: check.is_none_or(|c| c.0),
            linesearch_backtracks: backtracks,
            step_length,
            safeguard_taken: safeguard,
            phi_before,
            phi_after: 0.5 * f_norm * f_norm,
        });
        self.trace.coefficients.push(StepCoefficient::Vector(y));
        if let Some(b) = self.oracle.batch_sizes() {
            self.trace.batch_sizes.push(b);
        }
        self.x_prev = Some(std::mem::replace(&mut self.x, x_new));
        self.fx = f_new;
        self.f_norm = f_norm;
        self.iter += 1;
        self.record_row();

        let cfg = &self.cfg;
        self.done = if self.f_norm <= self.tol {
            Some(Termination::Converged)
        } else if self.f_norm > DIVERGENCE_FACTOR * self.f0_norm {
            Some(Termination::Diverged)
        } else if self.safeguards_in_row > cfg.max_safeguards {
            Some(Termination::SafeguardExhausted)
        } else if self.iter >= cfg.max_iter {
            Some(Termination::MaxIter)
        } else {
            None
        };
        if self.done.is_some() {
            return Ok(self.done);
        }
        if let Some(period) = cfg.restart_period {
            if self.iter % period == 0 {
                self.window.clear();
            }
        }
        self.new_direction()?;
        Ok(self.done)
    }

    pub(crate) fn run(mut self) -> Result<SolveTrace> {
        while self.step()?.is_none() {}
        Ok(self.into_trace())
    }
}

/// nlTGCR(m): each iteration steps `x += P_j y_j` with `y_j = V_j^T r_j`,
/// evaluates `r = -F(x)` and adds the direction `J(x) r` to the window.
///
/// In difference mode each iteration costs two evaluations of `F`; with an
/// exact Jacobian product it costs one evaluation plus one product.
pub fn nltgcr_solve(map: &dyn ResidualMap, x0: &Vector, cfg: &NonlinearSolveConfig) -> Result<SolveTrace> {
    NltgcrSolver::new(map, x0, cfg)?.run()
}

/// nlTGCR with the linearized update: inside a cycle of `restart_period`
/// iterations the residual follows the linear model `r -= V y` and every
/// Jacobian product is taken at the cycle start. `F` is evaluated only at
/// cycle ends, so one cycle is an inexact Newton step. With a residual check
/// the cycle ends once the model meets `|F + J delta| <= eta_n |F|` instead
/// of the global tolerance.
///
/// Trace rows are written at cycle ends; `steps` holds one record per cycle
/// and `coefficients` one entry per inner iteration.
pub fn nltgcr_linearized_solve(map: &dyn ResidualMap, x0: &Vector, cfg: &NonlinearSolveConfig) -> Result<SolveTrace> {
    cfg.validate()?;
    if cfg.update_mode != UpdateMode::Linearized {
        return Err(Error::InvalidConfig("update_mode must be Linearized".into()));
    }
    ensure_dim(map.dim(), x0.len())?;
    ensure_finite(x0, "initial guess")?;
    let period = cfg.restart_period.expect("validated");
    let mut oracle = MapOracle::new(map, cfg)?;
    let rec = Recorder::start();
    let mut trace = SolveTrace::new("nltgcr_linearized", x0).store_iterates(default_store(x0.len(), cfg.store_iterates));
    let mut window = DirectionWindow::new(cfg.m, cfg.window_mode)?.with_second_pass(cfg.second_pass);

    let mut x = x0.clone();
    let mut fx = oracle.eval(&x);
    ensure_finite(&fx, "initial residual")?;
    let mut f_norm = fx.norm();
    let f0_norm = f_norm;
    let tol = cfg.atol.max(cfg.rtol * f_norm);
    rec.row(&mut trace, &x, f_norm, oracle.objective(&x), oracle.fevals(), oracle.matvecs());
    let mut inner_total = 0;
    let mut safeguards_in_row = 0;
    let mut termination = if f_norm <= tol { Termination::Converged } else { Termination::MaxIter };

    while termination != Termination::Converged && inner_total < cfg.max_iter {
        window.clear();
        let mut r = -&fx;
        let mut xk = x.clone();
        let mut last_y = Vector::zeros(0);
        for _ in 0..period {
            if inner_total >= cfg.max_iter {
                break;
            }
            let v = oracle.jvp(&x, &fx, &r)?;
            match window_orthonormalize(&r, &v, &window) {
                Ok(out) => {
                    trace.dot_count += out.dot_products as u64;
                    window.push(out.p, out.v);
                }
                Err(Error::Breakdown { .. }) => break,
                Err(e) => return Err(e),
            }
            let y = coefficients(&window, &r, cfg.solve_least_squares);
            xk += window.combine_p(&y);
            r -= window.combine_v(&y);
            trace.dot_count += window.len() as u64 + 1;
            inner_total += 1;
            trace.coefficients.push(StepCoefficient::Vector(y.clone()));
            last_y = y;
            let r_norm = r.norm();
            // A residual check replaces the global tolerance as the inner
            // stopping rule, so each cycle is a forced inexact Newton step.
            let inner_tol = match cfg.residual_check {
                Some(rc) => rc.eta_at(f_norm) * f_norm,
                None => tol,
            };
            if r_norm <= inner_tol {
                break;
            }
        }

        let delta = &xk - &x;
        let model_norm = r.norm();
        let phi_before = 0.5 * f_norm * f_norm;
        let mut safeguard = delta.norm() == 0.0;
        let mut use_ls = cfg.line_search.is_some();
        let check = cfg.residual_check.map(|rc| (model_norm <= rc.eta_at(f_norm) * f_norm, rc.on_fail));
        if let Some((false, on_fail)) = check {
            match on_fail {
                OnFail::LineSearch => use_ls = true,
                OnFail::SafeguardRestart => safeguard = true,
                OnFail::Ignore => {}
            }
        }
        let mut backtracks = 0;
        let mut step_length = 1.0;
        let mut next = None;
        if !safeguard && use_ls {
            // J(x) delta = r_end - r_start under the linear model.
            let grad_dot_p = fx.dot(&(-&fx - &r));
            let mut last = None;
            let outcome = backtracking_linesearch(
                |z| {
                    let f = oracle.eval(z);
                    let phi = 0.5 * f.norm_squared();
                    last = Some(f);
                    Ok(phi)
                },
                phi_before,
                grad_dot_p,
                &x,
                &delta,
                &cfg.line_search.unwrap_or_default(),
            );
            match outcome {
                Ok(out) => {
                    backtracks = out.backtracks;
                    step_length = out.step;
                    next = Some((&x + &delta * out.step, last.expect("accepted point evaluated")));
                }
                Err(Error::NotDescent(_)) | Err(Error::LineSearchFailed(_)) => safeguard = true,
                Err(e) => return Err(e),
            }
        } else if !safeguard {
            let f_new = oracle.eval(&xk);
            next = Some((xk, f_new));
        }
        if safeguard {
            safeguards_in_row += 1;
            step_length = cfg.safeguard_step;
            let x_new = &x - &fx * cfg.safeguard_step;
            let f_new = oracle.eval(&x_new);
            next = Some((x_new, f_new));
        } else {
            safeguards_in_row = 0;
        }
        let (x_new, f_new) = next.expect("every branch produces an iterate");
        ensure_finite(&f_new, "nltgcr residual")?;
        let new_norm = f_new.norm();
        trace.steps.push(StepRecord {
            y: last_y,
            delta,
            model_residual: Some(model_norm),
            residual_check_pass: check.is_none_or(|c| c.0),
            linesearch_backtracks: backtracks,
            step_length,
            safeguard_taken: safeguard,
            phi_before,
            phi_after: 0.5 * new_norm * new_norm,
        });
        x = x_new;
        fx = f_new;
        f_norm = new_norm;
        rec.row(&mut trace, &x, f_norm, oracle.objective(&x), oracle.fevals(), oracle.matvecs());

        if f_norm <= tol {
            termination = Termination::Converged;
        } else if f_norm > DIVERGENCE_FACTOR * f0_norm {
            termination = Termination::Diverged;
            break;
        } else if safeguards_in_row > cfg.max_safeguards {
            termination = Termination::SafeguardExhausted;
            break;
        }
    }
    trace.x = x;
    trace.termination = termination;
    trace.feval_count = oracle.fevals();
    trace.matvec_count = oracle.matvecs();
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::{tgcr_solve, LinearSolveConfig};
    use crate::nonlinear::{LineSearchConfig, ResidualCheckConfig};
    use crate::ops::{AffineResidual, DenseOperator, FnResidual, Matrix, Structure};

    fn v(entries: &[f64]) -> Vector {
        Vector::from_column_slice(entries)
    }

    fn diag_system() -> AffineResidual<DenseOperator> {
        let a = DenseOperator::new(
            Matrix::from_diagonal(&v(&[1.0, 2.0])),
            Structure::SymmetricPositiveDefinite,
        )
        .unwrap();
        AffineResidual::new(a, v(&[1.0, 1.0])).unwrap()
    }

    #[test]
    fn shift_map_converges_in_one_step() {
        let c = v(&[1.0, -2.0, 0.5]);
        let cc = c.clone();
        let map = FnResidual::new(3, move |x: &Vector| x - &cc);
        let t = nltgcr_solve(&map, &Vector::zeros(3), &NonlinearSolveConfig::default()).unwrap();
        assert!(t.converged());
        assert_eq!(t.iterations(), 1);
        assert!((&t.x - &c).norm() < 1e-6);
    }

    #[test]
    fn affine_map_reproduces_tgcr_iterates() {
        let map = diag_system();
        let cfg = NonlinearSolveConfig {
            use_exact_jvp: true,
            rtol: 1e-12,
            ..Default::default()
        };
        let t = nltgcr_solve(&map, &Vector::zeros(2), &cfg).unwrap();
        let its = t.iterates.as_ref().unwrap();
        assert!((&its[1] - v(&[0.6, 0.6])).norm() < 1e-14);
        assert!((&its[2] - v(&[1.0, 0.5])).norm() < 1e-14);
        let lin = tgcr_solve(
            &map.op,
            &map.rhs,
            &Vector::zeros(2),
            &LinearSolveConfig {
                rtol: 1e-12,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(lin.iterations(), t.iterations());
        // One F evaluation per iteration plus the initial one.
        assert_eq!(t.feval_count, 1 + t.iterations() as u64);
    }

    fn smooth_map() -> impl ResidualMap {
        FnResidual::new(2, |x: &Vector| {
            v(&[x[0] + x[1] * x[1] - 1.0 + 0.1 * x[0].sin(), x[1] + 0.2 * x[0] * x[0]])
        })
    }

    #[test]
    fn frechet_mode_costs_two_evaluations_per_iteration() {
        let map = smooth_map();
        let cfg = NonlinearSolveConfig {
            m: 2,
            rtol: 1e-10,
            ..Default::default()
        };
        let t = nltgcr_solve(&map, &v(&[0.3, 0.4]), &cfg).unwrap();
        assert!(t.converged(), "{:?}", t.termination);
        assert_eq!(t.feval_count, 2 * t.iterations() as u64 + 1);
        assert_eq!(*t.fevals_cum.last().unwrap(), t.feval_count);
    }

    #[test]
    fn step_records_are_consistent() {
        let map = smooth_map();
        let cfg = NonlinearSolveConfig {
            m: 3,
            rtol: 1e-10,
            residual_check: Some(ResidualCheckConfig::new(0.9, OnFail::LineSearch)),
            line_search: Some(LineSearchConfig::default()),
            ..Default::default()
        };
        let mut solver = NltgcrSolver::new(&map, &v(&[0.3, 0.4]), &cfg).unwrap();
        while solver.termination().is_none() {
            let window = solver.window().clone();
            let r = -solver.residual();
            let y = window.project(&r);
            // Projection optimality: V^T (F + V y) = 0.
            let opt = window.project(&(solver.residual() + window.combine_v(&y)));
            assert!(opt.norm() < 1e-10);
            solver.step().unwrap();
            let rec = solver.trace().steps.last().unwrap();
            if !rec.safeguard_taken {
                assert!((&rec.delta - window.combine_p(&rec.y)).norm() < 1e-14);
                assert!(rec.phi_after <= rec.phi_before);
            }
        }
        assert!(solver.into_trace().converged());
    }

    #[test]
    fn linearized_cycle_is_a_gcr_newton_step() {
        // F = (x1 + x2^2 - 1, x2) at (0, 1): J = [[1, 2], [0, 1]], F = (0, 1).
        let map = FnResidual::with_jvp(
            2,
            |x: &Vector| v(&[x[0] + x[1] * x[1] - 1.0, x[1]]),
            |x: &Vector, u: &Vector| v(&[u[0] + 2.0 * x[1] * u[1], u[1]]),
        );
        let cfg = NonlinearSolveConfig {
            m: 2,
            max_iter: 2,
            update_mode: UpdateMode::Linearized,
            restart_period: Some(2),
            use_exact_jvp: true,
            ..Default::default()
        };
        let t = nltgcr_linearized_solve(&map, &v(&[0.0, 1.0]), &cfg).unwrap();
        // Two GCR steps solve the 2x2 Newton system exactly: delta = (2, -1).
        assert!((&t.x - v(&[2.0, 0.0])).norm() < 1e-12);
        assert_eq!(t.rows(), 2);
    }

    #[test]
    fn linearized_matches_nonlinear_on_affine_maps() {
        let map = diag_system();
        let cfg = NonlinearSolveConfig {
            use_exact_jvp: true,
            rtol: 1e-12,
            ..Default::default()
        };
        let lin_cfg = NonlinearSolveConfig {
            update_mode: UpdateMode::Linearized,
            restart_period: Some(10),
            ..cfg.clone()
        };
        let a = nltgcr_solve(&map, &Vector::zeros(2), &cfg).unwrap();
        let b = nltgcr_linearized_solve(&map, &Vector::zeros(2), &lin_cfg).unwrap();
        assert!((&a.x - &b.x).norm() < 1e-12);
        assert!(b.converged());
    }

    #[test]
    fn exact_jvp_requires_support() {
        let map = smooth_map();
        let cfg = NonlinearSolveConfig {
            use_exact_jvp: true,
            ..Default::default()
        };
        assert!(matches!(
            nltgcr_solve(&map, &v(&[0.0, 0.0]), &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }
}
