//! nlTGCR on multinomial logistic regression, with the residual check and
//! line search turned on, against gradient descent and nonlinear CG.
//!
//! cargo run --example nltgcr_softmax

use krylov_accel::nonlinear::{
    gradient_descent, nltgcr_solve, nonlinear_cg, FirstOrderConfig, NonlinearSolveConfig, OnFail,
    ResidualCheckConfig,
};
use krylov_accel::problems::{gen_synthetic_classification, SoftmaxProblem};
use krylov_accel::{SolveTrace, Vector};

fn main() -> krylov_accel::Result<()> {
    let data = gen_synthetic_classification(300, 20, 3, 1.0, 42)?;
    println!("dataset checksum {}", data.checksum());
    let p = SoftmaxProblem::new(data)?;
    let w0 = Vector::zeros(p.weights_dim());

    let nl = nltgcr_solve(
        &p,
        &w0,
        &NonlinearSolveConfig {
            m: 1,
            rtol: 1e-8,
            residual_check: Some(ResidualCheckConfig::new(0.9, OnFail::LineSearch)),
            ..Default::default()
        },
    )?;
    let fo = FirstOrderConfig {
        max_iter: 2000,
        rtol: 1e-8,
        ..Default::default()
    };
    let gd = gradient_descent(
        &p,
        &w0,
        &FirstOrderConfig {
            step: Some(1.0 / p.lipschitz_estimate()),
            ..fo.clone()
        },
    )?;
    let ncg = nonlinear_cg(&p, &w0, &fo)?;

    let report = |name: &str, t: &SolveTrace| {
        println!(
            "{name:<8} {:<10} iters {:>5} fevals {:>6} loss {:.6}",
            t.termination.as_str(),
            t.iterations(),
            t.feval_count,
            t.objective.last().copied().unwrap_or(f64::NAN)
        );
    };
    report("nltgcr", &nl);
    report("gd", &gd);
    report("ncg", &ncg);

    let rejected = nl.steps.iter().filter(|s| !s.residual_check_pass).count();
    println!("\nnltgcr: {rejected} of {} steps failed the residual check", nl.steps.len());
    Ok(())
}
