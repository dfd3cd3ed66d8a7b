//! Symmetric indefinite systems: CG loses its footing while TGCR(1) keeps
//! minimizing the residual within the two-sided bound.
//!
//! cargo run --example indefinite_systems

use krylov_accel::diagnostics::indefinite_bound;
use krylov_accel::linear::{cg_solve, tgcr_solve, LinearSolveConfig};
use krylov_accel::problems::{gen_linear_system, LinearFamily};
use krylov_accel::Vector;

fn main() -> krylov_accel::Result<()> {
    let n = 300;
    for (kp, km) in [(4.0, 4.0), (20.0, 5.0), (100.0, 100.0)] {
        let family = LinearFamily::SymIndef {
            kappa_plus: kp,
            kappa_minus: km,
            split: 0.5,
        };
        let sys = gen_linear_system(n, family, false, 3)?;
        let cfg = LinearSolveConfig {
            max_iter: 300,
            rtol: 1e-8,
            ..LinearSolveConfig::with_m(1)
        };
        let x0 = Vector::zeros(n);
        let tg = tgcr_solve(sys.op.as_ref(), &sys.b, &x0, &cfg)?;
        let cg = cg_solve(sys.op.as_ref(), &sys.b, &x0, &cfg)?;
        let k = tg.iterations();
        println!(
            "kappa+ {kp:>5} kappa- {km:>5}: tgcr(1) {} in {k} steps (bound at k: {:.1e}); cg {} after {} steps, rel resid {:.1e}",
            tg.termination.as_str(),
            indefinite_bound(kp, km, k)?,
            cg.termination.as_str(),
            cg.iterations(),
            cg.relative_residuals().last().unwrap()
        );
    }
    Ok(())
}
