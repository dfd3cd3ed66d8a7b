//! Writes a generated system in Matrix Market format, reads it back as a
//! sparse operator and solves it.
//!
//! cargo run --example matrix_market [path.mtx]

use krylov_accel::linear::{gmres_solve, tgcr_solve, LinearSolveConfig};
use krylov_accel::problems::{gen_linear_system, load_matrix_market, write_matrix_market, LinearFamily};
use krylov_accel::{LinearOperator, Vector};

fn main() -> krylov_accel::Result<()> {
    let path = match std::env::args().nth(1) {
        Some(p) => std::path::PathBuf::from(p),
        None => {
            let sys = gen_linear_system(200, LinearFamily::Spd { cond: 1e3 }, false, 11)?;
            let p = std::env::temp_dir().join("krylov_accel_example.mtx");
            write_matrix_market(&p, sys.op.as_ref())?;
            println!("wrote {}", p.display());
            p
        }
    };
    let a = load_matrix_market(&path)?;
    let n = a.dim();
    // Right-hand side for the all-ones solution.
    let b = a.apply(&Vector::from_element(n, 1.0));
    let cfg = |m| LinearSolveConfig {
        max_iter: 1000,
        rtol: 1e-10,
        ..LinearSolveConfig::with_m(m)
    };
    for (name, t) in [
        ("tgcr(1)", tgcr_solve(&a, &b, &Vector::zeros(n), &cfg(1))?),
        ("tgcr(10)", tgcr_solve(&a, &b, &Vector::zeros(n), &cfg(10))?),
        ("gmres(30)", gmres_solve(&a, &b, &Vector::zeros(n), &cfg(30))?),
    ] {
        println!(
            "{name:<10} {:<10} iters {:>5} |x - 1| {:.2e}",
            t.termination.as_str(),
            t.iterations(),
            (&t.x - Vector::from_element(n, 1.0)).norm()
        );
    }
    Ok(())
}
