//! Runs a JSON experiment config through the benchmark driver, the same path
//! the `krylov-accel run` command takes.
//!
//! cargo run --example bench_config [config.json]

use krylov_accel::bench::{run_experiment, RunOptions};

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/linear.json").to_string());
    let opts = RunOptions {
        out_dir: Some(std::env::temp_dir().join("krylov_accel_bench")),
        ..Default::default()
    };
    let report = match run_experiment(&path, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    };
    for row in &report.rows {
        match &row.outcome {
            Ok(s) => println!(
                "{:<12} seed {:>2} {:<10} iters {:>5} rel {:.2e} dots {:>8}",
                row.label, row.seed, s.termination, s.iterations, s.rel_resid, s.dots
            ),
            Err(msg) => println!("{:<12} seed {:>2} failed: {msg}", row.label, row.seed),
        }
    }
    println!("{} artifacts in {}", report.artifacts.len(), report.out_dir.display());
    std::process::exit(report.exit_code());
}
