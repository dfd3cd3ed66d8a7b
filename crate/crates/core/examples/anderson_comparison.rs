//! Anderson acceleration and TGCR on the same linear problem: equal work per
//! matrix product, very different orthogonalization cost.
//!
//! cargo run --example anderson_comparison

use krylov_accel::anderson::{aa_solve, AndersonConfig, FixedPointForm};
use krylov_accel::linear::{tgcr_solve, LinearSolveConfig};
use krylov_accel::problems::{gen_linear_system, LinearFamily};
use krylov_accel::{AffineResidual, Vector};

fn main() -> krylov_accel::Result<()> {
    let n = 1000;
    let sys = gen_linear_system(n, LinearFamily::Spd { cond: 100.0 }, true, 13)?;
    let x0 = Vector::zeros(n);
    let tol = 1e-10;

    let tg = tgcr_solve(
        sys.op.as_ref(),
        &sys.b,
        &x0,
        &LinearSolveConfig {
            max_iter: 2000,
            rtol: tol,
            ..LinearSolveConfig::with_m(1)
        },
    )?;
    println!("tgcr(1)  iters {:>5} dots {:>8}", tg.iterations(), tg.dot_count);

    // Richardson map x + (b - A x) with unit mixing.
    let affine = AffineResidual::new(sys.op.as_ref(), sys.b.clone())?;
    let fixed = FixedPointForm { map: &affine, step: 1.0 };
    for m in [1, 5, 10, 20] {
        let aa = aa_solve(
            &fixed,
            &x0,
            &AndersonConfig {
                m,
                max_iter: 2000,
                rtol: tol,
                ..Default::default()
            },
        )?;
        println!("aa({m:>2})   iters {:>5} dots {:>8} {}", aa.iterations(), aa.dot_count, aa.termination.as_str());
    }
    Ok(())
}
