//! Stochastic nlTGCR on softmax regression: a fixed gradient batch leaves
//! the loss at a noise floor that shrinks with the batch, while the full
//! batch converges. Hessian products use an independent batch of 200.
//!
//! A geometric schedule that starts from one sample takes Newton-like steps
//! on a single gradient and can overshoot badly; combine it with a residual
//! check and line search, or start from a larger batch.
//!
//! cargo run --example stochastic_softmax

use krylov_accel::nonlinear::NonlinearSolveConfig;
use krylov_accel::problems::{gen_synthetic_classification, SoftmaxProblem};
use krylov_accel::stochastic::{stochastic_nltgcr, BatchSchedule, GradBatch};
use krylov_accel::Vector;

fn main() -> krylov_accel::Result<()> {
    let p = SoftmaxProblem::new(gen_synthetic_classification(2000, 20, 3, 1.0, 5)?)?;
    let w0 = Vector::zeros(p.weights_dim());
    println!("{:>6} {:>3} {:>10} {:>10} {:>10}", "batch", "m", "loss@10", "loss@20", "loss@30");
    for batch in [50, 200, 2000] {
        for m in [1, 3, 10] {
            let mut cols = Vec::new();
            for seed in 0..5 {
                let sched = BatchSchedule {
                    grad: GradBatch::Constant(batch),
                    hess_batch: 200,
                    seed,
                };
                let cfg = NonlinearSolveConfig {
                    m,
                    max_iter: 30,
                    rtol: 1e-12,
                    ..Default::default()
                };
                let t = stochastic_nltgcr(&p, &w0, &cfg, &sched)?;
                let at = |k: usize| match &t.iterates {
                    Some(it) => p.loss(&it[k.min(it.len() - 1)]),
                    None => p.loss(&t.x),
                };
                cols.push([at(10), at(20), at(30)]);
            }
            let mean = |i: usize| cols.iter().map(|c| c[i]).sum::<f64>() / cols.len() as f64;
            println!("{batch:>6} {m:>3} {:>10.5} {:>10.5} {:>10.5}", mean(0), mean(1), mean(2));
        }
    }
    Ok(())
}
