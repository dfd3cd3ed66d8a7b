//! TGCR(m) against CG and GMRES on a symmetric positive definite system,
//! with the classical bound for reference.
//!
//! cargo run --example tgcr_linear

use krylov_accel::diagnostics::spd_bound;
use krylov_accel::linear::{cg_solve, gmres_solve, tgcr_solve, LinearSolveConfig, FULL_WINDOW};
use krylov_accel::problems::{gen_linear_system, LinearFamily};
use krylov_accel::Vector;

fn main() -> krylov_accel::Result<()> {
    let (n, kappa) = (500, 400.0);
    let sys = gen_linear_system(n, LinearFamily::Spd { cond: kappa }, false, 7)?;
    let x0 = Vector::zeros(n);
    let cfg = |m| LinearSolveConfig {
        max_iter: 400,
        rtol: 1e-10,
        ..LinearSolveConfig::with_m(m)
    };

    let runs = [
        ("tgcr(1)", tgcr_solve(sys.op.as_ref(), &sys.b, &x0, &cfg(1))?),
        ("tgcr(5)", tgcr_solve(sys.op.as_ref(), &sys.b, &x0, &cfg(5))?),
        ("cg", cg_solve(sys.op.as_ref(), &sys.b, &x0, &cfg(FULL_WINDOW))?),
        ("gmres", gmres_solve(sys.op.as_ref(), &sys.b, &x0, &cfg(FULL_WINDOW))?),
    ];
    println!("{:<8} {:>6} {:>8} {:>8} {:>12}", "solver", "iters", "matvecs", "dots", "|x - x_true|");
    for (name, t) in &runs {
        println!(
            "{name:<8} {:>6} {:>8} {:>8} {:>12.2e}",
            t.iterations(),
            t.matvec_count,
            t.dot_count,
            (&t.x - &sys.x_true).norm()
        );
    }

    // The short recurrence keeps TGCR(1) on the full-memory curve.
    let rel = runs[0].1.relative_residuals();
    println!("\n{:>5} {:>12} {:>12}", "k", "|r_k|/|r_0|", "bound");
    for k in (0..rel.len()).step_by(20) {
        println!("{k:>5} {:>12.3e} {:>12.3e}", rel[k], spd_bound(kappa, k)?);
    }
    Ok(())
}
