use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use krylov_accel::bench::{self, BenchError, RunOptions, TraceLevel, SOLVERS};

#[derive(Parser)]
#[command(name = "krylov-accel", version, about = "Run and compare TGCR, nlTGCR, Anderson and baseline solvers")]
struct Cli {
    /// Base seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    trace_level: Option<Level>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Summary,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config (JSON).
    Run { config: PathBuf },
    /// Print the registered solver names.
    ListSolvers,
    /// Generate a problem file from key=value parameters.
    GenProblem {
        family: String,
        params: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn fail(e: BenchError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListSolvers => {
            for s in SOLVERS {
                println!("{:<20} {}", s.name, s.about);
            }
            ExitCode::SUCCESS
        }
        Command::GenProblem { family, params, out } => {
            let spec = match bench::parse_problem_params(&family, &params) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            match bench::generate_problem(&spec, cli.seed.unwrap_or(0), &out) {
                Ok(()) => {
                    println!("wrote {}", out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Run { config } => {
            let opts = RunOptions {
                seed: cli.seed,
                out_dir: cli.out_dir,
                trace_level: cli.trace_level.map(|l| match l {
                    Level::Summary => TraceLevel::Summary,
                    Level::Full => TraceLevel::Full,
                }),
                threads: None,
            };
            match bench::run_experiment(&config, &opts) {
                Ok(report) => {
                    for row in &report.rows {
                        match &row.outcome {
                            Ok(s) => println!(
                                "{:<24} seed {:<4} {:<20} iters {:<6} rel_resid {:e}",
                                row.label, row.seed, s.termination, s.iterations, s.rel_resid
                            ),
                            Err(msg) => eprintln!("{:<24} seed {:<4} failed: {msg}", row.label, row.seed),
                        }
                    }
                    println!("artifacts in {}", report.out_dir.display());
                    ExitCode::from(report.exit_code() as u8)
                }
                Err(e) => fail(e),
            }
        }
    }
}
