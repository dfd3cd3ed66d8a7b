use crate::error::{Error, Result};
use crate::ops::Vector;

/// Parameters of the Armijo backtracking search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchConfig {
    /// Sufficient-decrease constant, in `(0, 1/2)`.
    pub alpha: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    /// Initial step is `max(1, eps_star |g'p| / |p|^2)`.
    pub eps_star: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            alpha: 1e-4,
            theta_min: 0.1,
            theta_max: 0.5,
            eps_star: 1e-4,
            max_backtracks: 30,
        }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::InvalidConfig(format!("alpha {} not in (0, 1/2)", self.alpha)));
        }
        if !(self.theta_min > 0.0 && self.theta_min <= self.theta_max && self.theta_max < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < theta_min <= theta_max < 1, got {} and {}",
                self.theta_min, self.theta_max
            )));
        }
        if !(self.eps_star >= 0.0) {
            return Err(Error::InvalidConfig("eps_star must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchOutcome {
    pub step: f64,
    /// Objective at the accepted point.
    pub phi: f64,
    /// Objective evaluations spent.
    pub evals: usize,
    pub backtracks: usize,
}

/// Armijo backtracking along `p` from `x`.
///
/// Accepts the first `beta` with `phi(x + beta p) <= phi0 + alpha beta grad_dot_p`.
/// Rejected steps shrink to the minimizer of the quadratic interpolant,
/// clamped to `[theta_min beta, theta_max beta]`. The last call to `phi` is
/// always at the accepted point.
pub fn backtracking_linesearch(
    mut phi: impl FnMut(&Vector) -> Result<f64>,
    phi0: f64,
    grad_dot_p: f64,
    x: &Vector,
    p: &Vector,
    params: &LineSearchConfig,
) -> Result<LineSearchOutcome> {
    params.validate()?;
    if !(grad_dot_p < 0.0) {
        return Err(Error::NotDescent(grad_dot_p));
    }
    let p_norm2 = p.norm_squared();
    if p_norm2 == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let mut beta = 1f64.max(params.eps_star * grad_dot_p.abs() / p_norm2);
    let mut evals = 0;
    for backtracks in 0..=params.max_backtracks {
        let trial = x + p * beta;
        let value = phi(&trial)?;
        evals += 1;
        if value.is_finite() && value <= phi0 + params.alpha * beta * grad_dot_p {
            return Ok(LineSearchOutcome {
                step: beta,
                phi: value,
                evals,
                backtracks,
            });
        }
        let shrink = if value.is_finite() {
            let curvature = value - phi0 - grad_dot_p * beta;
            if curvature > 0.0 {
                -grad_dot_p * beta / (2.0 * curvature)
            } else {
                params.theta_max
            }
        } else {
            params.theta_min
        };
        beta *= shrink.clamp(params.theta_min, params.theta_max);
    }
    Err(Error::LineSearchFailed(params.max_backtracks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Vector {
        Vector::from_element(1, v)
    }

    #[test]
    fn quadratic_accepts_full_step() {
        let params = LineSearchConfig {
            alpha: 0.25,
            ..Default::default()
        };
        let out = backtracking_linesearch(|z| Ok(0.5 * z[0] * z[0]), 0.5, -1.0, &scalar(1.0), &scalar(-1.0), &params)
            .unwrap();
        assert_eq!(out.step, 1.0);
        assert_eq!(out.backtracks, 0);
        assert_eq!(out.evals, 1);
        assert_eq!(out.phi, 0.0);
    }

    #[test]
    fn quartic_shrinks_until_armijo() {
        // phi = x^4 at x = 1, p = -1: phi'(1) p = -4, beta = 1 gives 0 > 1 - 1.8.
        let params = LineSearchConfig {
            alpha: 0.45,
            theta_min: 0.5,
            theta_max: 0.5,
            eps_star: 0.0,
            max_backtracks: 30,
        };
        let out = backtracking_linesearch(|z| Ok(z[0].powi(4)), 1.0, -4.0, &scalar(1.0), &scalar(-1.0), &params)
            .unwrap();
        assert_eq!(out.step, 0.5);
        assert_eq!(out.backtracks, 1);
        assert!(out.phi <= 1.0 - 0.45 * 0.5 * 4.0);
    }

    #[test]
    fn non_descent_rejected() {
        let err = backtracking_linesearch(
            |z| Ok(z[0]),
            0.0,
            0.0,
            &scalar(1.0),
            &scalar(-1.0),
            &LineSearchConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotDescent(_)));
    }

    #[test]
    fn exhausted_backtracks_fail() {
        let params = LineSearchConfig {
            max_backtracks: 3,
            ..Default::default()
        };
        let err = backtracking_linesearch(|_| Ok(f64::NAN), 1.0, -1.0, &scalar(0.0), &scalar(1.0), &params).unwrap_err();
        assert!(matches!(err, Error::LineSearchFailed(3)));
    }

    #[test]
    fn accepted_step_respects_lower_bound() {
        // phi = 0.5 L x^2 has an L-Lipschitz gradient.
        let params = LineSearchConfig::default();
        for &l in &[0.5, 2.0, 10.0, 100.0] {
            for &x0 in &[1.0, -3.0, 0.25] {
                let x = scalar(x0);
                let p = scalar(-x0 * 1.7);
                let g = l * x0 * p[0];
                let out = backtracking_linesearch(|z| Ok(0.5 * l * z[0] * z[0]), 0.5 * l * x0 * x0, g, &x, &p, &params)
                    .unwrap();
                let p_norm = p.norm();
                let bound = -(g / p_norm) * params.eps_star.min((1.0 - params.alpha) * params.theta_min / l);
                assert!(out.step * p_norm >= bound);
                assert!(out.phi <= 0.5 * l * x0 * x0 + params.alpha * out.step * g);
            }
        }
    }
}
