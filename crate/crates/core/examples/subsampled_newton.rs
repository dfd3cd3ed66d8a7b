//! Subsampled Newton on a finite sum of quadratics: the seed-averaged gap
//! to the optimum against its geometric envelope.
//!
//! cargo run --example subsampled_newton

use krylov_accel::stochastic::{make_quadratic_finite_sum, subsampled_newton, BatchSchedule, FiniteSumProblem, GradBatch, NewtonConfig};
use krylov_accel::Vector;

fn main() -> krylov_accel::Result<()> {
    let (d, n, mu, l) = (20, 1000, 1.0, 2.0);
    let problem = make_quadratic_finite_sum(d, n, mu, l, 12)?;
    let x_star = problem.x_star().expect("quadratic sums know their minimizer").clone();
    let x0 = &x_star + Vector::from_element(d, 2.0);
    let growth = 2.0;
    let seeds = 20;
    let iters = 25;

    let mut gap = vec![0.0; iters + 1];
    let mut c2 = problem.gradient_variance(&x_star);
    for seed in 0..seeds {
        let sched = BatchSchedule {
            grad: GradBatch::Geometric { eta: growth },
            hess_batch: 8,
            seed,
        };
        let cfg = NewtonConfig {
            step: mu / l,
            max_iter: iters,
            atol: 0.0,
        };
        let t = subsampled_newton(&problem, &x0, &sched, &cfg)?;
        for (k, f) in t.objective.iter().enumerate() {
            gap[k] += (f - problem.phi_star()) / seeds as f64;
        }
        for x in t.iterates.iter().flatten() {
            c2 = c2.max(problem.gradient_variance(x));
        }
    }
    // Every batch Hessian has its spectrum in [mu, L].
    let alpha = (problem.value(&x0) - problem.phi_star()).max(c2 * l / (mu * mu));
    let tau = (1.0 - mu * mu / (2.0 * l * l)).max(1.0 / growth);
    println!("alpha {alpha:.3}  tau {tau:.4}");
    println!("{:>4} {:>12} {:>12}", "k", "mean gap", "alpha tau^k");
    for (k, g) in gap.iter().enumerate().step_by(3) {
        println!("{k:>4} {g:>12.3e} {:>12.3e}", alpha * tau.powi(k as i32));
    }
    Ok(())
}
