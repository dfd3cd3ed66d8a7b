//! Nonlinear solvers: nlTGCR in its nonlinear and linearized forms, the
//! residual check and backtracking line search that globalize it, and the
//! first-order baselines it is compared against.

mod baselines;
mod linesearch;
pub(crate) mod nltgcr;

pub use baselines::{gradient_descent, nonlinear_cg, FirstOrderConfig};
pub use linesearch::{backtracking_linesearch, LineSearchConfig, LineSearchOutcome};
pub use nltgcr::{nltgcr_linearized_solve, nltgcr_solve, NltgcrSolver};

use crate::error::{Error, Result};
use crate::ops::{FrechetPolicy, Vector};
use crate::window::{DirectionWindow, WindowMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateMode {
    /// `r_{j+1} = -F(x_{j+1})` with the Jacobian taken at the newest iterate.
    #[default]
    Nonlinear,
    /// `r_{j+1} = r_j - V_j y_j` with the Jacobian frozen at the cycle start.
    Linearized,
}

/// Reaction to a failed residual check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OnFail {
    #[default]
    LineSearch,
    SafeguardRestart,
    Ignore,
}

/// Schedule of the forcing term `eta_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Forcing {
    #[default]
    Fixed,
    /// `eta_n = min(eta, |F(x_n)|)`.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualCheckConfig {
    pub eta: f64,
    pub on_fail: OnFail,
    pub forcing: Forcing,
}

impl ResidualCheckConfig {
    pub fn new(eta: f64, on_fail: OnFail) -> Self {
        Self {
            eta,
            on_fail,
            forcing: Forcing::Fixed,
        }
    }

    pub fn eta_at(&self, f_norm: f64) -> f64 {
        match self.forcing {
            Forcing::Fixed => self.eta,
            Forcing::Adaptive => self.eta.min(f_norm),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NonlinearSolveConfig {
    pub m: usize,
    pub max_iter: usize,
    /// Stop once `|F| <= max(atol, rtol |F(x_0)|)`.
    pub rtol: f64,
    pub atol: f64,
    pub update_mode: UpdateMode,
    pub frechet: FrechetPolicy,
    /// Use the map's exact Jacobian-vector product instead of differences.
    pub use_exact_jvp: bool,
    /// Solve `min |r - V y|` by QR instead of `y = V^T r`.
    pub solve_least_squares: bool,
    pub residual_check: Option<ResidualCheckConfig>,
    /// Armijo backtracking, applied to every step when set.
    pub line_search: Option<LineSearchConfig>,
    /// Damping `beta_0` of the safeguard step `x - beta_0 F(x)`.
    pub safeguard_step: f64,
    /// Consecutive safeguard steps tolerated before giving up.
    pub max_safeguards: usize,
    /// Cycle length; required in linearized mode.
    pub restart_period: Option<usize>,
    pub window_mode: WindowMode,
    pub second_pass: bool,
    pub store_iterates: Option<bool>,
    /// Heavy-ball term `v (x_n - x_{n-1})` for the stochastic solver.
    pub momentum: Option<f64>,
}

impl Default for NonlinearSolveConfig {
    fn default() -> Self {
        Self {
            m: 1,
            max_iter: 500,
            rtol: 1e-6,
            atol: 0.0,
            update_mode: UpdateMode::Nonlinear,
            frechet: FrechetPolicy::default(),
            use_exact_jvp: false,
            solve_least_squares: false,
            residual_check: None,
            line_search: None,
            safeguard_step: 1.0,
            max_safeguards: 10,
            restart_period: None,
            window_mode: WindowMode::MovingWindow,
            second_pass: false,
            store_iterates: None,
            momentum: None,
        }
    }
}

impl NonlinearSolveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.m == 0 {
            return bad("m must be >= 1".into());
        }
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return bad(format!("rtol {} not in (0, 1)", self.rtol));
        }
        if !(self.atol >= 0.0) {
            return bad(format!("atol {} negative", self.atol));
        }
        if let Some(rc) = &self.residual_check {
            if !(0.0..1.0).contains(&rc.eta) {
                return bad(format!("eta {} not in [0, 1)", rc.eta));
            }
        }
        if let Some(ls) = &self.line_search {
            ls.validate()?;
        }
        if !(self.safeguard_step > 0.0) {
            return bad("safeguard_step must be positive".into());
        }
        if self.restart_period == Some(0) {
            return bad("restart_period must be >= 1".into());
        }
        if self.update_mode == UpdateMode::Linearized && self.restart_period.is_none() {
            return bad("linearized update requires restart_period".into());
        }
        if let Some(mu) = self.momentum {
            if !(0.0..1.0).contains(&mu) {
                return bad(format!("momentum {mu} not in [0, 1)"));
            }
        }
        Ok(())
    }
}

/// Outcome of the check `|F(x) + V y| <= eta |F(x)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualCheck {
    pub pass: bool,
    pub lhs: f64,
}

/// Evaluates the residual check from stored `v_i` only; no evaluation of `F`.
pub fn residual_check(window: &DirectionWindow, y: &Vector, f_x: &Vector, eta: f64) -> ResidualCheck {
    let lhs = if window.is_empty() {
        f_x.norm()
    } else {
        (f_x + window.combine_v(y)).norm()
    };
    ResidualCheck {
        pass: lhs <= eta * f_x.norm(),
        lhs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_full_projection_passes() {
        let mut w = DirectionWindow::new(2, WindowMode::MovingWindow).unwrap();
        w.push(Vector::from_vec(vec![1.0, 0.0]), Vector::from_vec(vec![1.0, 0.0]));
        w.push(Vector::from_vec(vec![0.0, 1.0]), Vector::from_vec(vec![0.0, 1.0]));
        let f = Vector::from_vec(vec![0.3, -2.0]);
        let y = w.project(&(-&f));
        let out = residual_check(&w, &y, &f, 1e-3);
        assert!(out.pass);
        assert!(out.lhs <= 1e-12);
    }

    #[test]
    fn check_zero_step_never_passes() {
        let mut w = DirectionWindow::new(1, WindowMode::MovingWindow).unwrap();
        w.push(Vector::from_vec(vec![1.0, 0.0]), Vector::from_vec(vec![1.0, 0.0]));
        let f = Vector::from_vec(vec![0.3, -2.0]);
        let out = residual_check(&w, &Vector::zeros(1), &f, 0.99);
        assert!(!out.pass);
        assert!((out.lhs - f.norm()).abs() < 1e-15);
    }

    #[test]
    fn check_two_dimensional_threshold() {
        let mut w = DirectionWindow::new(1, WindowMode::MovingWindow).unwrap();
        w.push(Vector::from_vec(vec![1.0, 0.0]), Vector::from_vec(vec![1.0, 0.0]));
        let f = Vector::from_vec(vec![-1.0, -1.0]);
        let y = Vector::from_vec(vec![1.0]);
        let threshold = 1.0 / 2f64.sqrt();
        assert!((residual_check(&w, &y, &f, 0.5).lhs - 1.0).abs() < 1e-15);
        assert!(!residual_check(&w, &y, &f, threshold - 1e-9).pass);
        assert!(residual_check(&w, &y, &f, threshold + 1e-9).pass);
    }

    #[test]
    fn config_validation() {
        assert!(NonlinearSolveConfig::default().validate().is_ok());
        let cfg = NonlinearSolveConfig {
            update_mode: UpdateMode::Linearized,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = NonlinearSolveConfig {
            residual_check: Some(ResidualCheckConfig::new(1.0, OnFail::Ignore)),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
