//! Simultaneous gradient descent-ascent on a bilinear game.
//!
//! The saddle residual `(I - M) w - s` is purely skew, so `<r, K r> = 0` and
//! any GCR-type method stalls on its first step; GMRES needs the whole space.
//! The step matrix `M = I + skew` keeps the short recurrence, and TGCR(1) on
//! `M w = M w*` matches the full window. Windowed Anderson on the divergent
//! descent-ascent map needs a large table before it converges.
//!
//! cargo run --example bilinear_games

use krylov_accel::anderson::{aa_solve, AndersonConfig, FixedPointForm};
use krylov_accel::linear::{gmres_solve, tgcr_solve, LinearSolveConfig, FULL_WINDOW};
use krylov_accel::problems::{gen_bilinear_game, BilinearOptions};
use krylov_accel::{LinearOperator, SolveTrace, Vector};

fn report(name: &str, t: &SolveTrace, work: u64) {
    println!(
        "{name:<16} {:<10} work {work:>5} |w - w*| {:.2e}",
        t.termination.as_str(),
        t.error_to_star.last().unwrap()
    );
}

fn main() -> krylov_accel::Result<()> {
    let game = gen_bilinear_game(50, BilinearOptions::default(), 2)?;
    let saddle = game.saddle();
    let residual = game.residual();
    let x0 = Vector::zeros(2 * game.d());
    let cfg = |m| LinearSolveConfig {
        max_iter: 500,
        rtol: 1e-8,
        ..LinearSolveConfig::with_m(m)
    };

    let mut t = tgcr_solve(&residual.op, &residual.rhs, &x0, &cfg(1))?;
    t.attach_reference(&saddle);
    report("tgcr(1) on I-M", &t, t.matvec_count);

    let mut t = gmres_solve(&residual.op, &residual.rhs, &x0, &cfg(FULL_WINDOW))?;
    t.attach_reference(&saddle);
    report("gmres on I-M", &t, t.matvec_count);

    let step = game.gda_operator();
    let rhs = step.apply(&saddle);
    for m in [1, FULL_WINDOW] {
        let mut t = tgcr_solve(&step, &rhs, &x0, &cfg(m))?;
        t.attach_reference(&saddle);
        let name = if m == 1 { "tgcr(1) on M".to_string() } else { "tgcr(full) on M".to_string() };
        report(&name, &t, t.matvec_count);
    }

    for m in [10, 100] {
        let mut t = aa_solve(
            &FixedPointForm { map: &residual, step: 1.0 },
            &x0,
            &AndersonConfig {
                m,
                max_iter: 3000,
                rtol: 1e-8,
                ..Default::default()
            },
        )?;
        t.attach_reference(&saddle);
        report(&format!("aa({m}) on GDA"), &t, t.feval_count);
    }
    Ok(())
}
