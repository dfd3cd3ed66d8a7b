use std::path::PathBuf;

use serde::{Deserialize, Serialize};

/// One experiment: a problem family, the solvers to compare and the seeds.
///
/// Seeds are `seed, seed + 1, ..., seed + repetitions - 1`; each seed
/// regenerates the problem and reseeds stochastic schedules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub problem: ProblemSpec,
    pub solvers: Vec<SolverSpec>,
    #[serde(default = "one")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub outputs: OutputSpec,
}

fn one() -> usize {
    1
}

fn half() -> f64 {
    0.5
}

fn ten() -> f64 {
    10.0
}

fn yes() -> bool {
    true
}

/// Problem family and its parameters, tagged by `family`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Spd {
        n: usize,
        cond: f64,
        #[serde(default)]
        unit_norm: bool,
    },
    SymIndef {
        n: usize,
        kappa_plus: f64,
        kappa_minus: f64,
        #[serde(default = "half")]
        split: f64,
        #[serde(default)]
        unit_norm: bool,
    },
    General {
        n: usize,
        #[serde(default)]
        unit_norm: bool,
    },
    /// A MatrixMarket operator with right-hand side `A 1`.
    MatrixMarket { path: PathBuf },
    Bilinear {
        d: usize,
        #[serde(default = "ten")]
        cond: f64,
        #[serde(default = "yes")]
        spd: bool,
        #[serde(default = "yes")]
        random_linear_terms: bool,
        #[serde(default)]
        eta: Option<f64>,
    },
    Softmax {
        samples: usize,
        features: usize,
        classes: usize,
        #[serde(default = "one_f")]
        separation: f64,
    },
    QuadraticSum {
        d: usize,
        samples: usize,
        mu: f64,
        l: f64,
    },
}

fn one_f() -> f64 {
    1.0
}

impl ProblemSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ProblemSpec::Spd { .. } => "spd",
            ProblemSpec::SymIndef { .. } => "sym_indef",
            ProblemSpec::General { .. } => "general",
            ProblemSpec::MatrixMarket { .. } => "matrix_market",
            ProblemSpec::Bilinear { .. } => "bilinear",
            ProblemSpec::Softmax { .. } => "softmax",
            ProblemSpec::QuadraticSum { .. } => "quadratic_sum",
        }
    }
}

/// Window size: a count or the keyword `"full"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowSpec {
    Count(usize),
    Keyword(FullKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FullKeyword {
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnFailSpec {
    LineSearch,
    SafeguardRestart,
    Ignore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GradBatchSpec {
    Geometric { eta: f64 },
    Constant { size: usize },
}

/// A solver entry. Fields a method does not use are rejected at validation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub method: String,
    /// Output file stem; defaults to the method name plus the window size.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub m: Option<WindowSpec>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub rtol: Option<f64>,
    #[serde(default)]
    pub atol: Option<f64>,
    #[serde(default)]
    pub restart_period: Option<usize>,
    /// Residual-check threshold for nlTGCR.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub on_fail: Option<OnFailSpec>,
    /// Armijo backtracking on every nlTGCR step.
    #[serde(default)]
    pub line_search: Option<bool>,
    #[serde(default)]
    pub exact_jvp: Option<bool>,
    /// Fixed Frechet difference step; the scaled default otherwise.
    #[serde(default)]
    pub frechet_eps: Option<f64>,
    /// Anderson mixing parameter.
    #[serde(default)]
    pub beta: Option<f64>,
    /// Step length of gradient descent, of the Anderson fixed-point map
    /// `x - step F(x)` and of subsampled Newton.
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub momentum: Option<f64>,
    #[serde(default)]
    pub grad_batch: Option<GradBatchSpec>,
    #[serde(default)]
    pub hess_batch: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceLevel {
    /// Summary table and manifest only.
    Summary,
    /// Also one trace CSV per (solver, seed).
    #[default]
    Full,
}

impl TraceLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceLevel::Summary => "summary",
            TraceLevel::Full => "full",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub trace_level: TraceLevel,
    /// Write wall-clock columns; off by default so reruns are byte-identical.
    #[serde(default)]
    pub timing: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            trace_level: TraceLevel::Full,
            timing: false,
        }
    }
}
