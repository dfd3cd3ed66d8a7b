//! Benchmark harness: experiment configs, the solver registry, trace CSVs,
//! summary tables and run manifests.

mod config;
mod output;

pub use config::{
    ExperimentConfig, FullKeyword, GradBatchSpec, OnFailSpec, OutputSpec, ProblemSpec, SolverSpec, TraceLevel,
    WindowSpec,
};
pub use output::{trace_to_csv, write_summary, SummaryRow, SummaryStats, SUMMARY_HEADER, TRACE_HEADER};

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::anderson::{aa_solve, AndersonConfig, FixedPointForm};
use crate::error::{Error, Result};
use crate::linear::{cg_solve, gcr_solve, gmres_solve, tgcr_solve, LinearSolveConfig, FULL_WINDOW};
use crate::nonlinear::{
    gradient_descent, nltgcr_linearized_solve, nltgcr_solve, nonlinear_cg, FirstOrderConfig, LineSearchConfig,
    NonlinearSolveConfig, OnFail, ResidualCheckConfig, UpdateMode,
};
use crate::ops::{AffineResidual, FrechetPolicy, LinearOperator, ResidualMap, Vector};
use crate::problems::{
    gen_bilinear_game, gen_linear_system, gen_synthetic_classification, load_matrix_market, write_matrix_market,
    BilinearOptions, LinearFamily, SoftmaxProblem,
};
use crate::stochastic::{
    make_quadratic_finite_sum, stochastic_nltgcr, subsampled_newton, BatchSchedule, FiniteSumProblem, GradBatch,
    NewtonConfig, QuadraticFiniteSum,
};
use crate::trace::SolveTrace;

/// Environment variable capping the number of cells run in parallel.
pub const THREADS_ENV: &str = "KRYLOV_ACCEL_THREADS";

/// What a solver needs from the problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Requirement {
    /// An explicit linear operator and right-hand side.
    Linear,
    /// Any residual map.
    Residual,
    /// A residual map that is the gradient of a known objective.
    Objective,
    /// A finite-sum problem with per-sample oracles.
    FiniteSum,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverInfo {
    pub name: &'static str,
    pub requires: Requirement,
    pub about: &'static str,
    /// Config fields the method reads, besides `method` and `label`.
    fields: &'static [&'static str],
}

const LINEAR_FIELDS: &[&str] = &["m", "max_iter", "rtol", "atol", "restart_period"];
const NLTGCR_FIELDS: &[&str] = &[
    "m",
    "max_iter",
    "rtol",
    "atol",
    "restart_period",
    "eta",
    "on_fail",
    "line_search",
    "exact_jvp",
    "frechet_eps",
    "momentum",
];

pub const SOLVERS: &[SolverInfo] = &[
    SolverInfo {
        name: "tgcr",
        requires: Requirement::Linear,
        about: "truncated GCR(m) for linear systems",
        fields: LINEAR_FIELDS,
    },
    SolverInfo {
        name: "gcr",
        requires: Requirement::Linear,
        about: "classical full GCR",
        fields: &["max_iter", "rtol", "atol"],
    },
    SolverInfo {
        name: "cg",
        requires: Requirement::Linear,
        about: "conjugate gradient",
        fields: &["max_iter", "rtol", "atol"],
    },
    SolverInfo {
        name: "gmres",
        requires: Requirement::Linear,
        about: "full GMRES with modified Gram-Schmidt Arnoldi",
        fields: &["max_iter", "rtol", "atol"],
    },
    SolverInfo {
        name: "nltgcr",
        requires: Requirement::Residual,
        about: "nonlinear truncated GCR(m)",
        fields: NLTGCR_FIELDS,
    },
    SolverInfo {
        name: "nltgcr_linearized",
        requires: Requirement::Residual,
        about: "nonlinear TGCR with the linearized update, restarted every restart_period steps",
        fields: NLTGCR_FIELDS,
    },
    SolverInfo {
        name: "aa",
        requires: Requirement::Residual,
        about: "Anderson acceleration AA(m) on the map x - step F(x)",
        fields: &["m", "max_iter", "rtol", "atol", "beta", "step"],
    },
    SolverInfo {
        name: "gd",
        requires: Requirement::Residual,
        about: "gradient descent, fixed step or Armijo",
        fields: &["max_iter", "rtol", "atol", "step"],
    },
    SolverInfo {
        name: "ncg",
        requires: Requirement::Objective,
        about: "Polak-Ribiere+ nonlinear conjugate gradient",
        fields: &["max_iter", "rtol", "atol"],
    },
    SolverInfo {
        name: "stochastic_nltgcr",
        requires: Requirement::FiniteSum,
        about: "nonlinear TGCR with subsampled gradients and Hessian products",
        fields: &[
            "m",
            "max_iter",
            "rtol",
            "atol",
            "eta",
            "on_fail",
            "line_search",
            "exact_jvp",
            "frechet_eps",
            "momentum",
            "grad_batch",
            "hess_batch",
        ],
    },
    SolverInfo {
        name: "subsampled_newton",
        requires: Requirement::FiniteSum,
        about: "subsampled exact Newton",
        fields: &["max_iter", "atol", "step", "grad_batch", "hess_batch"],
    },
];

pub fn solver_info(name: &str) -> Option<&'static SolverInfo> {
    SOLVERS.iter().find(|s| s.name == name)
}

fn registered_names() -> String {
    SOLVERS.iter().map(|s| s.name).collect::<Vec<_>>().join(", ")
}

/// Harness failure, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    /// Unreadable or invalid config (exit code 2).
    #[error("config error: {0}")]
    Config(String),
    /// Failure while writing artifacts (exit code 3).
    #[error(transparent)]
    Artifact(#[from] Error),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Artifact(_) => 3,
        }
    }
}

fn config_err(msg: impl Into<String>) -> BenchError {
    BenchError::Config(msg.into())
}

/// Command-line overrides of config values.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub trace_level: Option<TraceLevel>,
    /// Cell parallelism; `None` reads [`THREADS_ENV`], then uses all cores.
    pub threads: Option<usize>,
}

/// Parses [`THREADS_ENV`]; unset or empty gives `None`.
pub fn threads_from_env() -> std::result::Result<Option<usize>, BenchError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) | Err(_) => Err(config_err(format!("{THREADS_ENV}={v} is not a positive integer"))),
            Ok(n) => Ok(Some(n)),
        },
        Err(_) => Ok(None),
    }
}

/// Outcome of a run whose config was valid.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub rows: Vec<SummaryRow>,
    /// Files written, relative to `out_dir`, sorted.
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }

    /// 0 when every cell produced a trace, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failures() == 0 {
            0
        } else {
            3
        }
    }
}

/// Reads and validates a JSON config; returns it with its raw bytes.
pub fn load_config(path: impl AsRef<Path>) -> std::result::Result<(ExperimentConfig, Vec<u8>), BenchError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let cfg: ExperimentConfig =
        serde_json::from_slice(&bytes).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    validate_config(&cfg).map_err(|e| match e {
        BenchError::Config(msg) => config_err(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    Ok((cfg, bytes))
}

fn set_fields(spec: &SolverSpec) -> Vec<&'static str> {
    let mut out = Vec::new();
    let mut mark = |set: bool, name: &'static str| {
        if set {
            out.push(name);
        }
    };
    mark(spec.m.is_some(), "m");
    mark(spec.max_iter.is_some(), "max_iter");
    mark(spec.rtol.is_some(), "rtol");
    mark(spec.atol.is_some(), "atol");
    mark(spec.restart_period.is_some(), "restart_period");
    mark(spec.eta.is_some(), "eta");
    mark(spec.on_fail.is_some(), "on_fail");
    mark(spec.line_search.is_some(), "line_search");
    mark(spec.exact_jvp.is_some(), "exact_jvp");
    mark(spec.frechet_eps.is_some(), "frechet_eps");
    mark(spec.beta.is_some(), "beta");
    mark(spec.step.is_some(), "step");
    mark(spec.momentum.is_some(), "momentum");
    mark(spec.grad_batch.is_some(), "grad_batch");
    mark(spec.hess_batch.is_some(), "hess_batch");
    out
}

/// Label used for file names: explicit, or the method plus its window size.
pub fn solver_label(spec: &SolverSpec) -> String {
    if let Some(l) = &spec.label {
        return l.clone();
    }
    match spec.m {
        Some(WindowSpec::Count(m)) => format!("{}_m{m}", spec.method),
        Some(WindowSpec::Keyword(FullKeyword::Full)) => format!("{}_full", spec.method),
        None => spec.method.clone(),
    }
}

/// Checks names, field usage and problem compatibility, and builds the
/// problem for the first seed so that bad parameters surface as config errors.
pub fn validate_config(cfg: &ExperimentConfig) -> std::result::Result<(), BenchError> {
    if cfg.solvers.is_empty() {
        return Err(config_err("no solvers listed"));
    }
    if cfg.repetitions == 0 {
        return Err(config_err("repetitions must be >= 1"));
    }
    if cfg.seed.checked_add(cfg.repetitions as u64 - 1).is_none() {
        return Err(config_err("seed range overflows"));
    }
    let instance = Instance::build(&cfg.problem, cfg.seed).map_err(|e| config_err(format!("problem: {e}")))?;
    let mut labels = BTreeSet::new();
    for (i, spec) in cfg.solvers.iter().enumerate() {
        let info = solver_info(&spec.method).ok_or_else(|| {
            config_err(format!(
                "solvers[{i}]: unknown method `{}`; registered: {}",
                spec.method,
                registered_names()
            ))
        })?;
        for field in set_fields(spec) {
            if !info.fields.contains(&field) {
                return Err(config_err(format!("solvers[{i}]: `{}` does not use `{field}`", spec.method)));
            }
        }
        if !instance.satisfies(info.requires) {
            return Err(config_err(format!(
                "solvers[{i}]: `{}` cannot run on a {} problem",
                spec.method,
                cfg.problem.family()
            )));
        }
        let label = solver_label(spec);
        if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
            return Err(config_err(format!("solvers[{i}]: label `{label}` must be [A-Za-z0-9_.-]+")));
        }
        if !labels.insert(label.clone()) {
            return Err(config_err(format!("solvers[{i}]: duplicate label `{label}`")));
        }
        check_solver(spec, &instance).map_err(|e| config_err(format!("solvers[{i}] ({}): {e}", spec.method)))?;
    }
    Ok(())
}

/// A generated problem owned by one cell.
pub enum Instance {
    Linear {
        op: Box<dyn LinearOperator>,
        b: Vector,
        x_star: Option<Vector>,
    },
    Softmax(SoftmaxProblem),
    Quadratic(QuadraticFiniteSum),
}

impl Instance {
    pub fn build(spec: &ProblemSpec, seed: u64) -> Result<Self> {
        let linear = |family, n, unit_norm| -> Result<Instance> {
            let sys = gen_linear_system(n, family, unit_norm, seed)?;
            Ok(Instance::Linear {
                op: sys.op,
                b: sys.b,
                x_star: Some(sys.x_true),
            })
        };
        match spec {
            ProblemSpec::Spd { n, cond, unit_norm } => linear(LinearFamily::Spd { cond: *cond }, *n, *unit_norm),
            ProblemSpec::SymIndef {
                n,
                kappa_plus,
                kappa_minus,
                split,
                unit_norm,
            } => linear(
                LinearFamily::SymIndef {
                    kappa_plus: *kappa_plus,
                    kappa_minus: *kappa_minus,
                    split: *split,
                },
                *n,
                *unit_norm,
            ),
            ProblemSpec::General { n, unit_norm } => linear(LinearFamily::General, *n, *unit_norm),
            ProblemSpec::MatrixMarket { path } => {
                let op = load_matrix_market(path)?;
                let ones = Vector::from_element(op.dim(), 1.0);
                let b = op.apply(&ones);
                Ok(Instance::Linear {
                    op: Box::new(op),
                    b,
                    x_star: Some(ones),
                })
            }
            ProblemSpec::Bilinear {
                d,
                cond,
                spd,
                random_linear_terms,
                eta,
            } => {
                let opts = BilinearOptions {
                    spd: *spd,
                    cond: *cond,
                    random_linear_terms: *random_linear_terms,
                    eta: *eta,
                };
                let game = gen_bilinear_game(*d, opts, seed)?;
                let residual = game.residual();
                Ok(Instance::Linear {
                    op: Box::new(residual.op),
                    b: residual.rhs,
                    x_star: Some(game.saddle()),
                })
            }
            ProblemSpec::Softmax {
                samples,
                features,
                classes,
                separation,
            } => {
                let data = gen_synthetic_classification(*samples, *features, *classes, *separation, seed)?;
                Ok(Instance::Softmax(SoftmaxProblem::new(data)?))
            }
            ProblemSpec::QuadraticSum { d, samples, mu, l } => {
                Ok(Instance::Quadratic(make_quadratic_finite_sum(*d, *samples, *mu, *l, seed)?))
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Instance::Linear { op, .. } => op.dim(),
            Instance::Softmax(p) => p.weights_dim(),
            Instance::Quadratic(q) => FiniteSumProblem::dim(q),
        }
    }

    pub fn satisfies(&self, req: Requirement) -> bool {
        match self {
            Instance::Linear { .. } => matches!(req, Requirement::Linear | Requirement::Residual),
            _ => req != Requirement::Linear,
        }
    }

    /// The residual map: `A x - b` for linear problems, the full gradient otherwise.
    pub fn residual(&self) -> Box<dyn ResidualMap + '_> {
        match self {
            Instance::Linear { op, b, .. } => {
                Box::new(AffineResidual::new(op.as_ref(), b.clone()).expect("generator dimensions agree"))
            }
            Instance::Softmax(p) => Box::new(p),
            Instance::Quadratic(q) => Box::new(q),
        }
    }

    pub fn finite_sum(&self) -> Option<&dyn FiniteSumProblem> {
        match self {
            Instance::Linear { .. } => None,
            Instance::Softmax(p) => Some(p),
            Instance::Quadratic(q) => Some(q),
        }
    }

    /// Gradient Lipschitz constant, when the construction knows one.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            Instance::Linear { .. } => None,
            Instance::Softmax(p) => Some(p.lipschitz_estimate()),
            Instance::Quadratic(q) => q.constants().map(|c| c.l),
        }
    }

    pub fn x_star(&self) -> Option<&Vector> {
        match self {
            Instance::Linear { x_star, .. } => x_star.as_ref(),
            Instance::Softmax(_) => None,
            Instance::Quadratic(q) => q.x_star(),
        }
    }
}

fn linear_config(spec: &SolverSpec, default_m: usize) -> Result<LinearSolveConfig> {
    let mut cfg = LinearSolveConfig::with_m(match spec.m {
        Some(WindowSpec::Count(m)) => m,
        Some(WindowSpec::Keyword(FullKeyword::Full)) => FULL_WINDOW,
        None => default_m,
    });
    if let Some(v) = spec.max_iter {
        cfg.max_iter = v;
    }
    if let Some(v) = spec.rtol {
        cfg.rtol = v;
    }
    if let Some(v) = spec.atol {
        cfg.atol = v;
    }
    cfg.restart_period = spec.restart_period;
    cfg.validate()?;
    Ok(cfg)
}

fn window_count(spec: &SolverSpec, default_m: usize) -> Result<usize> {
    match spec.m {
        Some(WindowSpec::Count(m)) => Ok(m),
        Some(WindowSpec::Keyword(FullKeyword::Full)) => Err(Error::InvalidConfig(format!(
            "`{}` needs a numeric window size",
            spec.method
        ))),
        None => Ok(default_m),
    }
}

fn nonlinear_config(spec: &SolverSpec) -> Result<NonlinearSolveConfig> {
    let mut cfg = NonlinearSolveConfig {
        m: window_count(spec, 1)?,
        ..Default::default()
    };
    if let Some(v) = spec.max_iter {
        cfg.max_iter = v;
    }
    if let Some(v) = spec.rtol {
        cfg.rtol = v;
    }
    if let Some(v) = spec.atol {
        cfg.atol = v;
    }
    cfg.restart_period = spec.restart_period;
    if spec.method == "nltgcr_linearized" {
        cfg.update_mode = UpdateMode::Linearized;
    }
    if let Some(eta) = spec.eta {
        let on_fail = match spec.on_fail.unwrap_or(OnFailSpec::LineSearch) {
            OnFailSpec::LineSearch => OnFail::LineSearch,
            OnFailSpec::SafeguardRestart => OnFail::SafeguardRestart,
            OnFailSpec::Ignore => OnFail::Ignore,
        };
        cfg.residual_check = Some(ResidualCheckConfig::new(eta, on_fail));
    } else if spec.on_fail.is_some() {
        return Err(Error::InvalidConfig("on_fail needs a residual check threshold eta".into()));
    }
    if spec.line_search == Some(true) {
        cfg.line_search = Some(LineSearchConfig::default());
    }
    cfg.use_exact_jvp = spec.exact_jvp.unwrap_or(false);
    if let Some(eps) = spec.frechet_eps {
        if !(eps > 0.0) {
            return Err(Error::InvalidConfig("frechet_eps must be positive".into()));
        }
        cfg.frechet = FrechetPolicy::Fixed(eps);
    }
    cfg.momentum = spec.momentum;
    cfg.validate()?;
    Ok(cfg)
}

fn first_order_config(spec: &SolverSpec, step: Option<f64>) -> FirstOrderConfig {
    let mut cfg = FirstOrderConfig {
        step,
        ..Default::default()
    };
    if let Some(v) = spec.max_iter {
        cfg.max_iter = v;
    }
    if let Some(v) = spec.rtol {
        cfg.rtol = v;
    }
    if let Some(v) = spec.atol {
        cfg.atol = v;
    }
    cfg
}

fn schedule(spec: &SolverSpec, samples: usize, seed: u64) -> BatchSchedule {
    BatchSchedule {
        grad: match spec.grad_batch {
            Some(GradBatchSpec::Geometric { eta }) => GradBatch::Geometric { eta },
            Some(GradBatchSpec::Constant { size }) => GradBatch::Constant(size),
            None => GradBatch::Geometric { eta: 2.0 },
        },
        hess_batch: spec.hess_batch.unwrap_or((samples / 10).max(1)),
        seed,
    }
}

/// Configuration checks that do not run the solver.
fn check_solver(spec: &SolverSpec, instance: &Instance) -> Result<()> {
    match spec.method.as_str() {
        "tgcr" => linear_config(spec, 1).map(drop),
        "gcr" | "cg" | "gmres" => linear_config(spec, FULL_WINDOW).map(drop),
        "nltgcr" | "nltgcr_linearized" | "stochastic_nltgcr" => {
            let cfg = nonlinear_config(spec)?;
            if cfg.use_exact_jvp && !instance.residual().has_exact_jvp() {
                return Err(Error::InvalidConfig("exact_jvp requested but the problem has none".into()));
            }
            if spec.method == "stochastic_nltgcr" {
                let n = instance.finite_sum().map_or(1, |p| p.samples());
                schedule(spec, n, 0).validate()?;
            }
            Ok(())
        }
        "aa" => aa_config(spec)?.validate(),
        "gd" => {
            if spec.step.is_none() && instance.lipschitz().is_none() && instance.residual().objective(&Vector::zeros(instance.dim())).is_none() {
                return Err(Error::InvalidConfig("gd on a problem without objective needs `step`".into()));
            }
            Ok(())
        }
        "ncg" => Ok(()),
        "subsampled_newton" => {
            let n = instance.finite_sum().map_or(1, |p| p.samples());
            schedule(spec, n, 0).validate()?;
            if spec.step.is_some_and(|s| !(s > 0.0)) {
                return Err(Error::InvalidConfig("step must be positive".into()));
            }
            Ok(())
        }
        other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
    }
}

fn aa_config(spec: &SolverSpec) -> Result<AndersonConfig> {
    let mut cfg = AndersonConfig {
        m: window_count(spec, 5)?,
        ..Default::default()
    };
    if let Some(v) = spec.beta {
        cfg.beta = v;
    }
    if let Some(v) = spec.max_iter {
        cfg.max_iter = v;
    }
    if let Some(v) = spec.rtol {
        cfg.rtol = v;
    }
    if let Some(v) = spec.atol {
        cfg.atol = v;
    }
    Ok(cfg)
}

/// Runs one solver on one problem instance from the zero initial guess.
pub fn run_solver(spec: &SolverSpec, instance: &Instance, seed: u64) -> Result<SolveTrace> {
    let x0 = Vector::zeros(instance.dim());
    let mut trace = match spec.method.as_str() {
        "tgcr" | "gcr" | "cg" | "gmres" => {
            let Instance::Linear { op, b, .. } = instance else {
                return Err(Error::InvalidConfig(format!("`{}` needs a linear problem", spec.method)));
            };
            let default_m = if spec.method == "tgcr" { 1 } else { FULL_WINDOW };
            let cfg = linear_config(spec, default_m)?;
            let solve = match spec.method.as_str() {
                "tgcr" => tgcr_solve,
                "gcr" => gcr_solve,
                "cg" => cg_solve,
                _ => gmres_solve,
            };
            solve(op.as_ref(), b, &x0, &cfg)?
        }
        "nltgcr" => nltgcr_solve(instance.residual().as_ref(), &x0, &nonlinear_config(spec)?)?,
        "nltgcr_linearized" => nltgcr_linearized_solve(instance.residual().as_ref(), &x0, &nonlinear_config(spec)?)?,
        "aa" => {
            let map = instance.residual();
            let step = spec.step.or(instance.lipschitz().map(|l| 1.0 / l)).unwrap_or(1.0);
            let fixed = FixedPointForm {
                map: map.as_ref(),
                step,
            };
            aa_solve(&fixed, &x0, &aa_config(spec)?)?
        }
        "gd" => {
            let step = spec.step.or(instance.lipschitz().map(|l| 1.0 / l));
            gradient_descent(instance.residual().as_ref(), &x0, &first_order_config(spec, step))?
        }
        "ncg" => nonlinear_cg(instance.residual().as_ref(), &x0, &first_order_config(spec, None))?,
        "stochastic_nltgcr" | "subsampled_newton" => {
            let problem = instance
                .finite_sum()
                .ok_or_else(|| Error::InvalidConfig(format!("`{}` needs a finite-sum problem", spec.method)))?;
            let sched = schedule(spec, problem.samples(), seed);
            if spec.method == "stochastic_nltgcr" {
                stochastic_nltgcr(problem, &x0, &nonlinear_config(spec)?, &sched)?
            } else {
                let mut cfg = NewtonConfig::default();
                if let Some(v) = spec.step {
                    cfg.step = v;
                }
                if let Some(v) = spec.max_iter {
                    cfg.max_iter = v;
                }
                if let Some(v) = spec.atol {
                    cfg.atol = v;
                }
                subsampled_newton(problem, &x0, &sched, &cfg)?
            }
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown method `{other}`; registered: {}",
                registered_names()
            )))
        }
    };
    if trace.error_to_star.is_empty() {
        if let Some(x_star) = instance.x_star() {
            trace.attach_reference(x_star);
        }
    }
    Ok(trace)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Loads a config file and runs it. See [`run_config`].
pub fn run_experiment(config_path: impl AsRef<Path>, opts: &RunOptions) -> std::result::Result<RunReport, BenchError> {
    let path = config_path.as_ref();
    let (cfg, bytes) = load_config(path)?;
    run_config(&cfg, &bytes, &path.display().to_string(), opts)
}

/// Runs every `(solver, seed)` cell, in parallel across cells, and writes
/// `<label>_seed<seed>.csv` traces (full trace level), `summary.csv` and
/// `manifest.json` into the output directory.
///
/// A solver error marks its cell failed; the other cells' artifacts, the
/// summary and the manifest are still written and the report exits with 3.
pub fn run_config(
    cfg: &ExperimentConfig,
    config_bytes: &[u8],
    config_name: &str,
    opts: &RunOptions,
) -> std::result::Result<RunReport, BenchError> {
    validate_config(cfg)?;
    let base_seed = opts.seed.unwrap_or(cfg.seed);
    if base_seed.checked_add(cfg.repetitions as u64 - 1).is_none() {
        return Err(config_err("seed range overflows"));
    }
    let seeds: Vec<u64> = (0..cfg.repetitions as u64).map(|r| base_seed + r).collect();
    let out_dir = opts.out_dir.clone().unwrap_or_else(|| cfg.outputs.dir.clone());
    let level = opts.trace_level.unwrap_or(cfg.outputs.trace_level);
    let timing = cfg.outputs.timing;
    let threads = match opts.threads {
        Some(n) => Some(n),
        None => threads_from_env()?,
    };
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;

    let cells: Vec<(u64, &SolverSpec)> = seeds
        .iter()
        .flat_map(|&s| cfg.solvers.iter().map(move |spec| (s, spec)))
        .collect();
    let run_cell = |&(seed, spec): &(u64, &SolverSpec)| -> (SummaryRow, Option<String>) {
        let label = solver_label(spec);
        let outcome = Instance::build(&cfg.problem, seed).and_then(|inst| run_solver(spec, &inst, seed));
        let mut file = None;
        let outcome = outcome.and_then(|trace| {
            if level == TraceLevel::Full {
                let name = format!("{label}_seed{seed}.csv");
                trace_to_csv(&trace, out_dir.join(&name), timing)?;
                file = Some(name);
            }
            Ok(SummaryStats::from_trace(&trace))
        });
        let row = SummaryRow {
            label,
            method: spec.method.clone(),
            seed,
            outcome: outcome.map_err(|e| e.to_string()),
        };
        (row, file)
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| config_err(format!("thread pool: {e}")))?;
    let results: Vec<(SummaryRow, Option<String>)> = pool.install(|| cells.par_iter().map(run_cell).collect());

    let mut artifacts: Vec<String> = results.iter().filter_map(|(_, f)| f.clone()).collect();
    let rows: Vec<SummaryRow> = results.into_iter().map(|(r, _)| r).collect();
    write_summary(&rows, out_dir.join("summary.csv"), timing)?;
    artifacts.push("summary.csv".into());
    artifacts.push("manifest.json".into());
    artifacts.sort();
    let failures = rows.iter().filter(|r| r.outcome.is_err()).count();
    let manifest = json!({
        "library": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": config_name,
        "config_sha256": sha256_hex(config_bytes),
        "name": cfg.name,
        "problem_family": cfg.problem.family(),
        "seeds": seeds,
        "solvers": cfg.solvers.iter().map(solver_label).collect::<Vec<_>>(),
        "trace_level": level.as_str(),
        "timing": timing,
        "cells": rows.len(),
        "failures": failures,
        "artifacts": artifacts,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    output::write_text(&out_dir.join("manifest.json"), &text)?;
    Ok(RunReport {
        out_dir,
        rows,
        artifacts,
    })
}

/// Builds a problem from `key=value` parameters, e.g. `n=100 cond=10`.
/// Values parse as JSON where possible and as strings otherwise.
pub fn parse_problem_params(family: &str, params: &[String]) -> std::result::Result<ProblemSpec, BenchError> {
    let mut obj = serde_json::Map::new();
    obj.insert("family".into(), serde_json::Value::String(family.into()));
    for p in params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| config_err(format!("parameter `{p}` is not key=value")))?;
        let value = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.into()));
        obj.insert(k.into(), value);
    }
    serde_json::from_value(serde_json::Value::Object(obj)).map_err(|e| config_err(format!("{family}: {e}")))
}

/// Writes a generated problem: the operator as MatrixMarket for linear
/// families (the residual operator `I - M` for bilinear games), the dataset
/// as CSV for softmax.
pub fn generate_problem(spec: &ProblemSpec, seed: u64, out: &Path) -> std::result::Result<(), BenchError> {
    if matches!(spec, ProblemSpec::QuadraticSum { .. }) {
        return Err(config_err("quadratic_sum has no file representation"));
    }
    let instance = Instance::build(spec, seed).map_err(|e| config_err(e.to_string()))?;
    match &instance {
        Instance::Linear { op, .. } => write_matrix_market(out, op.as_ref())?,
        Instance::Softmax(p) => p.data.write_csv(out)?,
        Instance::Quadratic(_) => unreachable!("rejected above"),
    }
    Ok(())
}
