use crate::error::{Error, Result};
use crate::ops::{ensure_dim, ensure_finite, CountingMap, ResidualMap, Vector};
use crate::trace::{default_store, Recorder, SolveTrace, Termination};

use super::{backtracking_linesearch, LineSearchConfig};

/// Settings shared by gradient descent and nonlinear CG on a gradient map.
#[derive(Debug, Clone)]
pub struct FirstOrderConfig {
    pub max_iter: usize,
    /// Stop once `|grad| <= max(atol, rtol |grad(x_0)|)`.
    pub rtol: f64,
    pub atol: f64,
    /// Fixed step length; `None` selects Armijo backtracking on the objective.
    pub step: Option<f64>,
    pub line_search: LineSearchConfig,
    pub store_iterates: Option<bool>,
}

impl Default for FirstOrderConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            rtol: 1e-6,
            atol: 0.0,
            step: None,
            line_search: LineSearchConfig::default(),
            store_iterates: None,
        }
    }
}

struct Objective<'a> {
    map: &'a dyn ResidualMap,
    evals: u64,
}

impl Objective<'_> {
    fn eval(&mut self, x: &Vector) -> f64 {
        self.evals += 1;
        self.map.objective(x).unwrap_or(f64::NAN)
    }
}

fn prepare(map: &dyn ResidualMap, x0: &Vector, cfg: &FirstOrderConfig, needs_objective: bool) -> Result<()> {
    ensure_dim(map.dim(), x0.len())?;
    ensure_finite(x0, "initial guess")?;
    cfg.line_search.validate()?;
    if !(cfg.rtol > 0.0 && cfg.rtol < 1.0) {
        return Err(Error::InvalidConfig(format!("rtol {} not in (0, 1)", cfg.rtol)));
    }
    if let Some(s) = cfg.step {
        if !(s > 0.0) {
            return Err(Error::InvalidConfig("step must be positive".into()));
        }
    }
    if needs_objective && map.objective(x0).is_none() {
        return Err(Error::InvalidConfig("line search needs an objective".into()));
    }
    Ok(())
}

/// Gradient descent `x -= s grad f(x)` on a map `F = grad f`.
///
/// `feval_count` counts gradient and objective evaluations alike; objective
/// values written to the trace only are not counted.
pub fn gradient_descent(map: &dyn ResidualMap, x0: &Vector, cfg: &FirstOrderConfig) -> Result<SolveTrace> {
    prepare(map, x0, cfg, cfg.step.is_none())?;
    let grad = CountingMap::new(map);
    let mut obj = Objective { map, evals: 0 };
    let rec = Recorder::start();
    let mut trace = SolveTrace::new("gd", x0).store_iterates(default_store(x0.len(), cfg.store_iterates));

    let mut x = x0.clone();
    let mut g = grad.eval(&x);
    ensure_finite(&g, "gradient")?;
    let tol = cfg.atol.max(cfg.rtol * g.norm());
    let mut f = if cfg.step.is_none() { Some(obj.eval(&x)) } else { None };
    rec.row(&mut trace, &x, g.norm(), f.or_else(|| map.objective(&x)), grad.evals() + obj.evals, 0);
    trace.termination = Termination::MaxIter;
    if g.norm() <= tol {
        trace.termination = Termination::Converged;
    }
    for _ in 0..cfg.max_iter {
        if trace.termination == Termination::Converged {
            break;
        }
        let p = -&g;
        match cfg.step {
            Some(s) => x += &p * s,
            None => {
                let f0 = f.expect("objective tracked in line-search mode");
                match backtracking_linesearch(|z| Ok(obj.eval(z)), f0, -g.norm_squared(), &x, &p, &cfg.line_search) {
                    Ok(out) => {
                        x += &p * out.step;
                        f = Some(out.phi);
                    }
                    Err(Error::LineSearchFailed(_)) => {
                        trace.termination = Termination::Breakdown;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        g = grad.eval(&x);
        ensure_finite(&g, "gradient")?;
        let gn = g.norm();
        rec.row(&mut trace, &x, gn, f.or_else(|| map.objective(&x)), grad.evals() + obj.evals, 0);
        if gn <= tol {
            trace.termination = Termination::Converged;
        }
    }
    trace.x = x;
    Ok(trace)
}

/// Polak-Ribiere+ nonlinear conjugate gradient with Armijo backtracking.
/// Directions that fail to descend are reset to steepest descent. After the
/// first step the search starts from `1.01 * 2 (f_k - f_{k-1}) / <g_k, d_k>`,
/// the step at which a quadratic model repeats the last decrease.
pub fn nonlinear_cg(map: &dyn ResidualMap, x0: &Vector, cfg: &FirstOrderConfig) -> Result<SolveTrace> {
    prepare(map, x0, cfg, true)?;
    let grad = CountingMap::new(map);
    let mut obj = Objective { map, evals: 0 };
    let rec = Recorder::start();
    let mut trace = SolveTrace::new("ncg", x0).store_iterates(default_store(x0.len(), cfg.store_iterates));

    let mut x = x0.clone();
    let mut g = grad.eval(&x);
    ensure_finite(&g, "gradient")?;
    let tol = cfg.atol.max(cfg.rtol * g.norm());
    let mut f = obj.eval(&x);
    rec.row(&mut trace, &x, g.norm(), Some(f), grad.evals() + obj.evals, 0);
    trace.termination = if g.norm() <= tol { Termination::Converged } else { Termination::MaxIter };
    let mut d = -&g;
    let mut f_prev: Option<f64> = None;
    for _ in 0..cfg.max_iter {
        if trace.termination == Termination::Converged {
            break;
        }
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            d = -&g;
            slope = -g.norm_squared();
        }
        if let Some(prev) = f_prev {
            let init = 1.01 * 2.0 * (f - prev) / slope;
            if init.is_finite() && init > 0.0 {
                d *= init;
                slope *= init;
            }
        }
        let out = match backtracking_linesearch(|z| Ok(obj.eval(z)), f, slope, &x, &d, &cfg.line_search) {
            Ok(out) => out,
            Err(Error::LineSearchFailed(_)) => {
                trace.termination = Termination::Breakdown;
                break;
            }
            Err(e) => return Err(e),
        };
        x += &d * out.step;
        f_prev = Some(f);
        f = out.phi;
        let g_new = grad.eval(&x);
        ensure_finite(&g_new, "gradient")?;
        let beta = (g_new.dot(&(&g_new - &g)) / g.norm_squared()).max(0.0);
        d = -&g_new + &d * beta;
        g = g_new;
        let gn = g.norm();
        rec.row(&mut trace, &x, gn, Some(f), grad.evals() + obj.evals, 0);
        if gn <= tol {
            trace.termination = Termination::Converged;
        }
    }
    trace.x = x;
    Ok(trace)
}
