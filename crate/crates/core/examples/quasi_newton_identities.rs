//! Reads the inverse-Jacobian approximation out of a live nlTGCR window and
//! checks the secant, no-change and optimality identities.
//!
//! cargo run --example quasi_newton_identities

use krylov_accel::diagnostics::{build_inverse_jacobian, verify_inverse_optimality, verify_secant_nochange};
use krylov_accel::nonlinear::{NltgcrSolver, NonlinearSolveConfig};
use krylov_accel::problems::seeded_rng;
use krylov_accel::{FnResidual, Matrix, Vector};

fn main() -> krylov_accel::Result<()> {
    // F(x) = A x + 0.1 x^3 - b with a diagonally dominant A.
    let d = 6;
    let a = Matrix::from_fn(d, d, |i, j| if i == j { 3.0 } else { 0.2 / (1.0 + (i + j) as f64) });
    let b = Vector::from_fn(d, |i, _| 1.0 + i as f64 * 0.1);
    let (a2, b2) = (a.clone(), b.clone());
    let map = FnResidual::new(d, move |x: &Vector| &a2 * x + x.map(|v| 0.1 * v * v * v) - &b2);
    let jacobian = |x: &Vector| &a + Matrix::from_diagonal(&x.map(|v| 0.3 * v * v));

    let cfg = NonlinearSolveConfig {
        m: 3,
        rtol: 1e-12,
        ..Default::default()
    };
    let mut solver = NltgcrSolver::new(&map, &Vector::zeros(d), &cfg)?;
    let mut rng = seeded_rng(1);
    println!("{:>4} {:>10} {:>10} {:>10} {:>12}", "iter", "secant", "no-change", "multisec", "opt. gap");
    loop {
        if !solver.window().is_empty() {
            let g = build_inverse_jacobian(solver.window())?;
            let rep = verify_secant_nochange(&g, solver.window(), 50, &mut rng);
            let gap = verify_inverse_optimality(solver.window(), &jacobian(solver.x()), 200, &mut rng)?;
            println!(
                "{:>4} {:>10.1e} {:>10.1e} {:>10.1e} {:>12.3e}",
                solver.iterations(),
                rep.secant_residual,
                rep.nochange_max,
                rep.multisecant_residual,
                gap
            );
        }
        if let Some(t) = solver.step()? {
            println!("terminated: {}", t.as_str());
            break;
        }
    }
    Ok(())
}
