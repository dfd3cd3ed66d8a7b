//! Per-iteration solve records.

use std::time::Instant;

use crate::ops::Vector;

/// Why a solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIter,
    Breakdown,
    Diverged,
    SafeguardExhausted,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIter => "max_iter",
            Termination::Breakdown => "breakdown",
            Termination::Diverged => "diverged",
            Termination::SafeguardExhausted => "safeguard_exhausted",
        }
    }
}

/// Step coefficient of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum StepCoefficient {
    /// `alpha_j` of the linear solvers.
    Scalar(f64),
    /// `y_j` (nlTGCR) or `theta_j` (Anderson).
    Vector(Vector),
}

/// Per-step bookkeeping of the nonlinear solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub y: Vector,
    pub delta: Vector,
    /// Value of `|F(x_j) + V_j y_j|` (model residual), when a check ran.
    pub model_residual: Option<f64>,
    pub residual_check_pass: bool,
    pub linesearch_backtracks: usize,
    /// Step length finally applied along `delta`.
    pub step_length: f64,
    pub safeguard_taken: bool,
    /// `phi = 0.5 |F|^2` before and after the step.
    pub phi_before: f64,
    pub phi_after: f64,
}

/// The universal solver output: one row per iterate `x_0, x_1, ...`.
#[derive(Debug, Clone)]
pub struct SolveTrace {
    pub solver: String,
    /// Final iterate.
    pub x: Vector,
    /// Stored iterates (all rows), when recording was enabled.
    pub iterates: Option<Vec<Vector>>,
    pub residual_norms: Vec<f64>,
    /// Objective per row; empty when the problem has none.
    pub objective: Vec<f64>,
    /// `|x_j - x*|` per row; empty unless a reference solution was attached.
    pub error_to_star: Vec<f64>,
    pub fevals_cum: Vec<u64>,
    pub matvecs_cum: Vec<u64>,
    pub wall_nanos: Vec<u64>,
    pub coefficients: Vec<StepCoefficient>,
    pub steps: Vec<StepRecord>,
    /// `(gradient batch, Hessian batch)` per iteration for subsampled solvers.
    pub batch_sizes: Vec<(usize, usize)>,
    pub feval_count: u64,
    pub matvec_count: u64,
    /// Inner products of length-n vectors (or their flop equivalent).
    pub dot_count: u64,
    pub termination: Termination,
}

impl SolveTrace {
    pub(crate) fn new(solver: impl Into<String>, x0: &Vector) -> Self {
        Self {
            solver: solver.into(),
            x: x0.clone(),
            iterates: None,
            residual_norms: Vec::new(),
            objective: Vec::new(),
            error_to_star: Vec::new(),
            fevals_cum: Vec::new(),
            matvecs_cum: Vec::new(),
            wall_nanos: Vec::new(),
            coefficients: Vec::new(),
            steps: Vec::new(),
            batch_sizes: Vec::new(),
            feval_count: 0,
            matvec_count: 0,
            dot_count: 0,
            termination: Termination::MaxIter,
        }
    }

    pub(crate) fn store_iterates(mut self, store: bool) -> Self {
        if store {
            self.iterates = Some(Vec::new());
        }
        self
    }

    /// Number of completed iterations (rows minus the initial one).
    pub fn iterations(&self) -> usize {
        self.residual_norms.len().saturating_sub(1)
    }

    pub fn rows(&self) -> usize {
        self.residual_norms.len()
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_norms.last().unwrap_or(&f64::NAN)
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    /// Residual norms divided by the initial one.
    pub fn relative_residuals(&self) -> Vec<f64> {
        let r0 = self.residual_norms.first().copied().unwrap_or(1.0);
        self.residual_norms.iter().map(|r| r / r0).collect()
    }

    /// Fills `error_to_star` from stored iterates. No-op without iterates.
    pub fn attach_reference(&mut self, x_star: &Vector) {
        if let Some(its) = &self.iterates {
            self.error_to_star = its.iter().map(|x| (x - x_star).norm()).collect();
        }
    }

    /// First row at which `objective <= target`, with the cumulative function
    /// evaluations at that row.
    pub fn first_reaching_objective(&self, target: f64) -> Option<(usize, u64)> {
        self.objective
            .iter()
            .position(|&f| f <= target)
            .map(|row| (row, self.fevals_cum[row]))
    }
}

/// Appends rows to a trace while tracking elapsed time.
pub(crate) struct Recorder {
    start: Instant,
}

impl Recorder {
    pub(crate) fn start() -> Self {
        Self {
            start: Instant::now(),
        }
    }

    pub(crate) fn row(
        &self,
        trace: &mut SolveTrace,
        x: &Vector,
        resid: f64,
        objective: Option<f64>,
        fevals: u64,
        matvecs: u64,
    ) {
        trace.residual_norms.push(resid);
        if let Some(f) = objective {
            trace.objective.push(f);
        }
        trace.fevals_cum.push(fevals);
        trace.matvecs_cum.push(matvecs);
        trace.wall_nanos.push(self.start.elapsed().as_nanos() as u64);
        if let Some(its) = trace.iterates.as_mut() {
            its.push(x.clone());
        }
        trace.feval_count = fevals;
        trace.matvec_count = matvecs;
    }
}

/// Iterates are kept for `dim <= 1024` unless the caller says otherwise.
pub(crate) fn default_store(dim: usize, requested: Option<bool>) -> bool {
    requested.unwrap_or(dim <= 1024)
}
