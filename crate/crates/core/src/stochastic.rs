//! Finite-sum problems with subsampled oracles, stochastic nlTGCR and the
//! subsampled exact Newton baseline.

use nalgebra::SymmetricEigen;
use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::nonlinear::nltgcr::{NltgcrSolver, Oracle};
use crate::nonlinear::{NonlinearSolveConfig, UpdateMode};
use crate::ops::{ensure_dim, ensure_finite, frechet_jvp, FnResidual, Matrix, ResidualMap, Vector};
use crate::problems::seeded_rng;
use crate::trace::{Recorder, SolveTrace, Termination};

/// Problem constants known from construction.
///
/// `sigma` is the root mean square spectral deviation of one component
/// Hessian from the full Hessian, so a batch of `b` samples deviates by
/// about `sigma / sqrt(b)`. `c` bounds the gradient variance trace by `c^2`
/// at `x*`. `m` is the Hessian Lipschitz constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants {
    pub mu: f64,
    pub l: f64,
    pub m: f64,
    pub sigma: f64,
    pub c: f64,
}

/// `phi(x) = (1/N) sum_i f_i(x)` with per-sample gradient and Hessian oracles.
pub trait FiniteSumProblem: Send + Sync {
    fn dim(&self) -> usize;
    /// `N`, the number of components.
    fn samples(&self) -> usize;
    fn component_grad(&self, x: &Vector, index: usize) -> Vector;
    fn component_hvp(&self, x: &Vector, index: usize, u: &Vector) -> Vector;

    /// Mean of the component gradients over `batch`, summed in the given order.
    fn batch_grad(&self, x: &Vector, batch: &[usize]) -> Vector {
        let mut g = Vector::zeros(self.dim());
        for &i in batch {
            g += self.component_grad(x, i);
        }
        g / batch.len() as f64
    }

    fn batch_hvp(&self, x: &Vector, batch: &[usize], u: &Vector) -> Vector {
        let mut v = Vector::zeros(self.dim());
        for &i in batch {
            v += self.component_hvp(x, i, u);
        }
        v / batch.len() as f64
    }

    /// Dense batch Hessian assembled column by column from products.
    fn batch_hessian(&self, x: &Vector, batch: &[usize]) -> Matrix {
        let d = self.dim();
        let mut h = Matrix::zeros(d, d);
        for j in 0..d {
            let e = Vector::from_fn(d, |i, _| if i == j { 1.0 } else { 0.0 });
            h.set_column(j, &self.batch_hvp(x, batch, &e));
        }
        h
    }

    fn objective(&self, _x: &Vector) -> Option<f64> {
        None
    }

    fn x_star(&self) -> Option<&Vector> {
        None
    }

    fn constants(&self) -> Option<ProblemConstants> {
        None
    }
}

/// Gradient batch growth rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradBatch {
    /// `|G_i| = ceil(eta^i)`, `eta > 1`.
    Geometric { eta: f64 },
    Constant(usize),
}

/// Batch sizes per iteration. Sizes are clamped to `[1, N]` and batches are
/// drawn uniformly without replacement, fresh for each oracle and iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchSchedule {
    pub grad: GradBatch,
    pub hess_batch: usize,
    pub seed: u64,
}

impl BatchSchedule {
    /// Both oracles use every sample on every iteration.
    pub fn full(samples: usize) -> Self {
        Self {
            grad: GradBatch::Constant(samples),
            hess_batch: samples,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.grad {
            GradBatch::Geometric { eta } if !(eta > 1.0 && eta.is_finite()) => {
                Err(Error::InvalidConfig(format!("geometric growth needs eta > 1, got {eta}")))
            }
            GradBatch::Constant(0) => Err(Error::InvalidConfig("gradient batch must be >= 1".into())),
            _ if self.hess_batch == 0 => Err(Error::InvalidConfig("hessian batch must be >= 1".into())),
            _ => Ok(()),
        }
    }

    pub fn grad_size(&self, iteration: usize, samples: usize) -> usize {
        let raw = match self.grad {
            GradBatch::Geometric { eta } => {
                let v = eta.powf(iteration as f64).ceil();
                if v >= samples as f64 {
                    samples
                } else {
                    v as usize
                }
            }
            GradBatch::Constant(n) => n,
        };
        raw.clamp(1, samples.max(1))
    }

    pub fn hess_size(&self, samples: usize) -> usize {
        self.hess_batch.clamp(1, samples.max(1))
    }
}

/// Sorted uniform sample of `size` indices out of `n`.
fn draw(rng: &mut ChaCha8Rng, n: usize, size: usize) -> Vec<usize> {
    if size >= n {
        return (0..n).collect();
    }
    let mut idx = sample(rng, n, size).into_vec();
    idx.sort_unstable();
    idx
}

struct SampledOracle<'a> {
    problem: &'a dyn FiniteSumProblem,
    schedule: BatchSchedule,
    rng: ChaCha8Rng,
    grad_batch: Vec<usize>,
    hess_batch: Vec<usize>,
    exact: bool,
    cfg: NonlinearSolveConfig,
    fevals: u64,
    matvecs: u64,
}

impl Oracle for SampledOracle<'_> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn eval(&mut self, x: &Vector) -> Vector {
        self.fevals += 1;
        self.problem.batch_grad(x, &self.grad_batch)
    }

    fn jvp(&mut self, x: &Vector, _fx: &Vector, u: &Vector) -> Result<Vector> {
        if self.exact {
            self.matvecs += 1;
            let v = self.problem.batch_hvp(x, &self.hess_batch, u);
            ensure_finite(&v, "batch hessian product")?;
            return Ok(v);
        }
        // Differences of the Hessian-batch gradient; both ends use the same batch.
        self.fevals += 2;
        let (problem, batch) = (self.problem, &self.hess_batch);
        let map = FnResidual::new(problem.dim(), |z: &Vector| problem.batch_grad(z, batch));
        frechet_jvp(&map, x, u, None, self.cfg.frechet)
    }

    fn objective(&self, x: &Vector) -> Option<f64> {
        self.problem.objective(x)
    }

    fn fevals(&self) -> u64 {
        self.fevals
    }

    fn matvecs(&self) -> u64 {
        self.matvecs
    }

    fn resample(&mut self, iteration: usize) {
        let n = self.problem.samples();
        let g = self.schedule.grad_size(iteration, n);
        let h = self.schedule.hess_size(n);
        self.grad_batch = draw(&mut self.rng, n, g);
        self.hess_batch = draw(&mut self.rng, n, h);
    }

    fn batch_sizes(&self) -> Option<(usize, usize)> {
        Some((self.grad_batch.len(), self.hess_batch.len()))
    }
}

/// nlTGCR driven by subsampled oracles.
///
/// Before each new iterate is evaluated a gradient batch and an independent
/// Hessian batch are drawn; the residual at that iterate and the direction
/// built there use them. The trace records `(|G_n|, |H_n|)` per row and, when
/// the problem knows `x*`, the error `|x_n - x*|`.
///
/// With an exact product the Hessian batch enters through `batch_hvp`,
/// otherwise through differences of the Hessian-batch gradient.
pub fn stochastic_nltgcr(
    problem: &dyn FiniteSumProblem,
    x0: &Vector,
    cfg: &NonlinearSolveConfig,
    schedule: &BatchSchedule,
) -> Result<SolveTrace> {
    schedule.validate()?;
    if problem.samples() == 0 {
        return Err(Error::InvalidConfig("problem has no samples".into()));
    }
    if cfg.update_mode != UpdateMode::Nonlinear {
        return Err(Error::InvalidConfig("stochastic nlTGCR supports the nonlinear update only".into()));
    }
    let mut cfg = cfg.clone();
    if problem.x_star().is_some() {
        cfg.store_iterates = Some(true);
    }
    let oracle = SampledOracle {
        problem,
        schedule: *schedule,
        rng: seeded_rng(schedule.seed),
        grad_batch: Vec::new(),
        hess_batch: Vec::new(),
        exact: cfg.use_exact_jvp,
        cfg: cfg.clone(),
        fevals: 0,
        matvecs: 0,
    };
    let mut trace = NltgcrSolver::with_oracle(Box::new(oracle), x0, &cfg, "stochastic_nltgcr")?.run()?;
    if let Some(x_star) = problem.x_star() {
        trace.attach_reference(x_star);
    }
    Ok(trace)
}

/// Settings of [`subsampled_newton`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Step `s` in `x -= s H^{-1} g`.
    pub step: f64,
    pub max_iter: usize,
    /// Stop once the batch gradient norm falls below `atol`.
    pub atol: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            step: 1.0,
            max_iter: 50,
            atol: 0.0,
        }
    }
}

/// Largest dimension for which the subsampled Hessian is formed densely.
pub const NEWTON_DENSE_LIMIT: usize = 512;

/// Subsampled exact Newton: `x -= s J(x; H_i)^{-1} F(x; G_i)`.
///
/// The batch Hessian is formed densely and factored by Cholesky; a factor
/// failure retries with `lambda I` added, `lambda = 1e-8 trace / d`.
/// Residual norms in the trace are batch gradient norms.
pub fn subsampled_newton(
    problem: &dyn FiniteSumProblem,
    x0: &Vector,
    schedule: &BatchSchedule,
    cfg: &NewtonConfig,
) -> Result<SolveTrace> {
    schedule.validate()?;
    let d = problem.dim();
    ensure_dim(d, x0.len())?;
    ensure_finite(x0, "initial guess")?;
    if d > NEWTON_DENSE_LIMIT {
        return Err(Error::DimensionTooLarge {
            dim: d,
            limit: NEWTON_DENSE_LIMIT,
        });
    }
    if !(cfg.step > 0.0) {
        return Err(Error::InvalidConfig("newton step must be positive".into()));
    }
    let n = problem.samples();
    if n == 0 {
        return Err(Error::InvalidConfig("problem has no samples".into()));
    }
    let mut rng = seeded_rng(schedule.seed);
    let rec = Recorder::start();
    let mut trace = SolveTrace::new("subsampled_newton", x0).store_iterates(problem.x_star().is_some());
    let (mut fevals, mut matvecs) = (0u64, 0u64);

    let mut x = x0.clone();
    let mut batch = draw(&mut rng, n, schedule.grad_size(0, n));
    let mut g = problem.batch_grad(&x, &batch);
    fevals += 1;
    ensure_finite(&g, "batch gradient")?;
    rec.row(&mut trace, &x, g.norm(), problem.objective(&x), fevals, matvecs);
    trace.termination = Termination::MaxIter;
    for it in 0..cfg.max_iter {
        if g.norm() <= cfg.atol {
            trace.termination = Termination::Converged;
            break;
        }
        let h_batch = draw(&mut rng, n, schedule.hess_size(n));
        trace.batch_sizes.push((batch.len(), h_batch.len()));
        let h = problem.batch_hessian(&x, &h_batch);
        matvecs += d as u64;
        let step = match h.clone().cholesky() {
            Some(ch) => ch.solve(&g),
            None => {
                let lambda = 1e-8 * h.trace().abs().max(f64::MIN_POSITIVE) / d as f64;
                let damped = &h + Matrix::identity(d, d) * lambda;
                match damped.cholesky() {
                    Some(ch) => ch.solve(&g),
                    None => {
                        trace.termination = Termination::Breakdown;
                        break;
                    }
                }
            }
        };
        x -= step * cfg.step;
        batch = draw(&mut rng, n, schedule.grad_size(it + 1, n));
        g = problem.batch_grad(&x, &batch);
        fevals += 1;
        ensure_finite(&g, "batch gradient")?;
        rec.row(&mut trace, &x, g.norm(), problem.objective(&x), fevals, matvecs);
    }
    if g.norm() <= cfg.atol {
        trace.termination = Termination::Converged;
    }
    trace.x = x;
    if let Some(x_star) = problem.x_star() {
        trace.attach_reference(x_star);
    }
    Ok(trace)
}

/// `f_i(x) = 0.5 (x - c_i)^T H_i (x - c_i)` with SPD `H_i`.
#[derive(Debug, Clone)]
pub struct QuadraticFiniteSum {
    hessians: Vec<Matrix>,
    centers: Vec<Vector>,
    mean_hessian: Matrix,
    x_star: Vector,
    phi_star: f64,
    constants: ProblemConstants,
}

impl QuadraticFiniteSum {
    /// Builds the sum from explicit components.
    pub fn new(hessians: Vec<Matrix>, centers: Vec<Vector>, mu: f64, l: f64) -> Result<Self> {
        let n = hessians.len();
        if n == 0 || centers.len() != n {
            return Err(Error::InvalidConfig("need one center per Hessian, at least one".into()));
        }
        let d = centers[0].len();
        for (h, c) in hessians.iter().zip(&centers) {
            ensure_dim(d, c.len())?;
            if h.nrows() != d || h.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: h.nrows(),
                });
            }
        }
        let mean_hessian = hessians.iter().fold(Matrix::zeros(d, d), |acc, h| acc + h) / n as f64;
        let rhs = hessians.iter().zip(&centers).fold(Vector::zeros(d), |acc, (h, c)| acc + h * c) / n as f64;
        let x_star = mean_hessian
            .clone()
            .cholesky()
            .ok_or(Error::Breakdown { norm: 0.0, tol: 0.0 })?
            .solve(&rhs);
        let sigma2 = hessians
            .iter()
            .map(|h| {
                let dev = SymmetricEigen::new(h - &mean_hessian).eigenvalues;
                dev.amax().powi(2)
            })
            .sum::<f64>()
            / n as f64;
        let mut problem = Self {
            hessians,
            centers,
            mean_hessian,
            x_star,
            phi_star: 0.0,
            constants: ProblemConstants {
                mu,
                l,
                m: 0.0,
                sigma: sigma2.sqrt(),
                c: 0.0,
            },
        };
        problem.phi_star = problem.value(&problem.x_star);
        problem.constants.c = problem.gradient_variance(&problem.x_star).sqrt();
        Ok(problem)
    }

    pub fn hessians(&self) -> &[Matrix] {
        &self.hessians
    }

    pub fn centers(&self) -> &[Vector] {
        &self.centers
    }

    /// Full Hessian `(1/N) sum_i H_i`.
    pub fn mean_hessian(&self) -> &Matrix {
        &self.mean_hessian
    }

    pub fn phi_star(&self) -> f64 {
        self.phi_star
    }

    pub fn value(&self, x: &Vector) -> f64 {
        let total: f64 = self
            .hessians
            .iter()
            .zip(&self.centers)
            .map(|(h, c)| {
                let e = x - c;
                0.5 * e.dot(&(h * &e))
            })
            .sum();
        total / self.hessians.len() as f64
    }

    /// `tr Cov(grad f_i(x))` over a uniformly drawn component.
    pub fn gradient_variance(&self, x: &Vector) -> f64 {
        let mean = FiniteSumProblem::batch_grad(self, x, &(0..self.samples()).collect::<Vec<_>>());
        let total: f64 = (0..self.samples())
            .map(|i| (self.component_grad(x, i) - &mean).norm_squared())
            .sum();
        total / self.samples() as f64
    }
}

impl FiniteSumProblem for QuadraticFiniteSum {
    fn dim(&self) -> usize {
        self.x_star.len()
    }

    fn samples(&self) -> usize {
        self.hessians.len()
    }

    fn component_grad(&self, x: &Vector, index: usize) -> Vector {
        &self.hessians[index] * (x - &self.centers[index])
    }

    fn component_hvp(&self, _x: &Vector, index: usize, u: &Vector) -> Vector {
        &self.hessians[index] * u
    }

    fn batch_hessian(&self, _x: &Vector, batch: &[usize]) -> Matrix {
        let d = self.x_star.len();
        let sum = batch.iter().fold(Matrix::zeros(d, d), |acc, &i| acc + &self.hessians[i]);
        sum / batch.len() as f64
    }

    fn objective(&self, x: &Vector) -> Option<f64> {
        Some(self.value(x))
    }

    fn x_star(&self) -> Option<&Vector> {
        Some(&self.x_star)
    }

    fn constants(&self) -> Option<ProblemConstants> {
        Some(self.constants)
    }
}

/// The full gradient, formed as the batch mean over all samples in index
/// order so that it matches a full-batch stochastic run bit for bit.
impl ResidualMap for QuadraticFiniteSum {
    fn dim(&self) -> usize {
        self.x_star.len()
    }

    fn eval(&self, x: &Vector) -> Vector {
        self.batch_grad(x, &(0..self.samples()).collect::<Vec<_>>())
    }

    fn jvp_exact(&self, x: &Vector, u: &Vector) -> Option<Vector> {
        Some(self.batch_hvp(x, &(0..self.samples()).collect::<Vec<_>>(), u))
    }

    fn has_exact_jvp(&self) -> bool {
        true
    }

    fn objective(&self, x: &Vector) -> Option<f64> {
        Some(self.value(x))
    }
}

/// Random strongly convex quadratic sum with every component spectrum in
/// `[mu, L]`: `H_i = Q_i diag(lambda) Q_i^T` with Haar-like `Q_i` and
/// eigenvalues uniform in the band, centers `c_i ~ N(0, I)`.
pub fn make_quadratic_finite_sum(d: usize, samples: usize, mu: f64, l: f64, seed: u64) -> Result<QuadraticFiniteSum> {
    if d == 0 || samples == 0 {
        return Err(Error::InvalidConfig("need d >= 1 and N >= 1".into()));
    }
    if !(mu > 0.0 && mu <= l && l.is_finite()) {
        return Err(Error::InvalidConfig(format!("need 0 < mu <= L, got {mu} and {l}")));
    }
    let mut rng = seeded_rng(seed);
    let mut hessians = Vec::with_capacity(samples);
    let mut centers = Vec::with_capacity(samples);
    for _ in 0..samples {
        let h = if mu == l {
            Matrix::identity(d, d) * mu
        } else {
            let g = Matrix::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
            let q = g.qr().q();
            let lambda = Vector::from_fn(d, |_, _| mu + (l - mu) * rand::Rng::random::<f64>(&mut rng));
            let h = &q * Matrix::from_diagonal(&lambda) * q.transpose();
            // Symmetrize away rounding.
            (&h + h.transpose()) * 0.5
        };
        hessians.push(h);
        centers.push(Vector::from_fn(d, |_, _| StandardNormal.sample(&mut rng)));
    }
    QuadraticFiniteSum::new(hessians, centers, mu, l)
}

/// `E[X^2] / E[X]^2` over a sample, the moment ratio bounded by `gamma`.
pub fn moment_ratio(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let second = values.iter().map(|v| v * v).sum::<f64>() / n;
    second / (mean * mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinear::nltgcr_solve;

    fn exact_cfg(m: usize, max_iter: usize) -> NonlinearSolveConfig {
        NonlinearSolveConfig {
            m,
            max_iter,
            rtol: 1e-12,
            use_exact_jvp: true,
            ..Default::default()
        }
    }

    #[test]
    fn single_component_minimizer_is_its_center() {
        let q = make_quadratic_finite_sum(4, 1, 0.5, 3.0, 1).unwrap();
        assert!((q.x_star().unwrap() - &q.centers()[0]).norm() < 1e-12);
    }

    #[test]
    fn isotropic_minimizer_is_mean_center() {
        let q = make_quadratic_finite_sum(3, 7, 2.0, 2.0, 4).unwrap();
        let mean = q.centers().iter().fold(Vector::zeros(3), |a, c| a + c) / 7.0;
        assert!((q.x_star().unwrap() - mean).norm() < 1e-12);
        assert!(q.hessians().iter().all(|h| *h == Matrix::identity(3, 3) * 2.0));
    }

    #[test]
    fn minimizer_matches_dense_solve() {
        let q = make_quadratic_finite_sum(2, 3, 1.0, 4.0, 11).unwrap();
        let h = q.hessians()[0].clone() + &q.hessians()[1] + &q.hessians()[2];
        let b = &q.hessians()[0] * &q.centers()[0] + &q.hessians()[1] * &q.centers()[1] + &q.hessians()[2] * &q.centers()[2];
        let direct = h.lu().solve(&b).unwrap();
        assert!((q.x_star().unwrap() - direct).norm() < 1e-12);
    }

    #[test]
    fn component_spectra_stay_in_band() {
        let q = make_quadratic_finite_sum(6, 40, 0.5, 2.0, 3).unwrap();
        for h in q.hessians() {
            let ev = SymmetricEigen::new(h.clone()).eigenvalues;
            assert!(ev.min() >= 0.5 - 1e-10 && ev.max() <= 2.0 + 1e-10);
        }
        let g = q.gradient_variance(q.x_star().unwrap());
        assert!((q.constants().unwrap().c.powi(2) - g).abs() < 1e-12);
    }

    #[test]
    fn full_gradient_is_mean_of_components() {
        let q = make_quadratic_finite_sum(5, 30, 1.0, 3.0, 8).unwrap();
        let mut rng = seeded_rng(2);
        for _ in 0..5 {
            let x = Vector::from_fn(5, |_, _| StandardNormal.sample(&mut rng));
            let full = &(q.mean_hessian() * &x) - q.mean_hessian() * q.x_star().unwrap();
            assert!((ResidualMap::eval(&q, &x) - full).norm() < 1e-10);
        }
    }

    #[test]
    fn subsampled_gradient_is_unbiased() {
        let q = make_quadratic_finite_sum(3, 50, 1.0, 3.0, 5).unwrap();
        let x = Vector::from_vec(vec![0.3, -1.0, 2.0]);
        let full = ResidualMap::eval(&q, &x);
        let mut rng = seeded_rng(9);
        let draws = 10_000;
        let samples: Vec<Vector> = (0..draws)
            .map(|_| {
                let b = draw(&mut rng, 50, 5);
                q.batch_grad(&x, &b)
            })
            .collect();
        let mean = samples.iter().fold(Vector::zeros(3), |a, s| a + s) / draws as f64;
        for k in 0..3 {
            let var = samples.iter().map(|s| (s[k] - mean[k]).powi(2)).sum::<f64>() / (draws - 1) as f64;
            assert!((mean[k] - full[k]).abs() <= 3.0 * (var / draws as f64).sqrt());
        }
        // Trace of the batch covariance against C^2 / b with the finite-population factor.
        let tr: f64 = samples.iter().map(|s| (s - &mean).norm_squared()).sum::<f64>() / (draws - 1) as f64;
        let bound = q.gradient_variance(&x) / 5.0;
        assert!(tr <= bound * 1.2);
    }

    #[test]
    fn schedule_sizes_are_clamped_and_geometric() {
        let s = BatchSchedule {
            grad: GradBatch::Geometric { eta: 2.0 },
            hess_batch: 5000,
            seed: 0,
        };
        let sizes: Vec<usize> = (0..12).map(|i| s.grad_size(i, 1000)).collect();
        assert_eq!(&sizes[..4], &[1, 2, 4, 8]);
        assert_eq!(sizes[11], 1000);
        assert_eq!(s.hess_size(1000), 1000);
        assert!(BatchSchedule {
            grad: GradBatch::Geometric { eta: 1.0 },
            ..s
        }
        .validate()
        .is_err());
    }

    #[test]
    fn full_batch_matches_deterministic_solver() {
        let q = make_quadratic_finite_sum(6, 25, 1.0, 4.0, 21).unwrap();
        let x0 = Vector::from_element(6, 1.0);
        let cfg = exact_cfg(3, 30);
        let det = nltgcr_solve(&q, &x0, &cfg).unwrap();
        let sto = stochastic_nltgcr(&q, &x0, &cfg, &BatchSchedule::full(25)).unwrap();
        assert_eq!(det.residual_norms, sto.residual_norms);
        assert_eq!(det.x, sto.x);
        assert_eq!(det.feval_count, sto.feval_count);
        assert_eq!(sto.batch_sizes.len(), sto.rows());
        assert!(sto.batch_sizes.iter().all(|&b| b == (25, 25)));
        assert_eq!(sto.error_to_star.len(), sto.rows());
    }

    #[test]
    fn unit_batches_do_not_blow_up() {
        let q = make_quadratic_finite_sum(4, 200, 1.0, 2.0, 6).unwrap();
        let sched = BatchSchedule {
            grad: GradBatch::Constant(1),
            hess_batch: 1,
            seed: 3,
        };
        let t = stochastic_nltgcr(&q, &Vector::zeros(4), &exact_cfg(1, 60), &sched).unwrap();
        assert_eq!(t.termination, Termination::MaxIter);
        assert!(t.residual_norms.iter().all(|r| r.is_finite()));
    }

    #[test]
    fn stochastic_run_is_seed_deterministic() {
        let q = make_quadratic_finite_sum(4, 100, 1.0, 2.0, 6).unwrap();
        let sched = BatchSchedule {
            grad: GradBatch::Geometric { eta: 2.0 },
            hess_batch: 10,
            seed: 42,
        };
        let cfg = NonlinearSolveConfig {
            m: 2,
            max_iter: 15,
            rtol: 1e-12,
            ..Default::default()
        };
        let a = stochastic_nltgcr(&q, &Vector::zeros(4), &cfg, &sched).unwrap();
        let b = stochastic_nltgcr(&q, &Vector::zeros(4), &cfg, &sched).unwrap();
        assert_eq!(a.residual_norms, b.residual_norms);
        // One batch gradient per iterate plus two per difference product.
        assert_eq!(a.feval_count, 1 + 3 * a.iterations() as u64);
    }

    #[test]
    fn exact_newton_with_one_sample_converges_in_one_step() {
        let q = make_quadratic_finite_sum(5, 1, 0.5, 5.0, 2).unwrap();
        let cfg = NewtonConfig {
            max_iter: 1,
            ..Default::default()
        };
        let t = subsampled_newton(&q, &Vector::zeros(5), &BatchSchedule::full(1), &cfg).unwrap();
        assert!((&t.x - q.x_star().unwrap()).norm() < 1e-10);
        assert!(t.error_to_star[1] < 1e-10);
    }

    #[test]
    fn full_batch_newton_is_deterministic_newton() {
        let q = make_quadratic_finite_sum(4, 20, 1.0, 3.0, 2).unwrap();
        let x0 = Vector::from_element(4, 2.0);
        let cfg = NewtonConfig {
            step: 0.5,
            max_iter: 3,
            atol: 0.0,
        };
        let t = subsampled_newton(&q, &x0, &BatchSchedule::full(20), &cfg).unwrap();
        let mut x = x0;
        let h = q.mean_hessian().clone();
        for k in 1..=3 {
            let g = ResidualMap::eval(&q, &x);
            x -= h.clone().cholesky().unwrap().solve(&g) * 0.5;
            assert!((t.error_to_star[k] - (&x - q.x_star().unwrap()).norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn moment_ratio_of_constant_is_one() {
        assert!((moment_ratio(&[2.0, 2.0, 2.0]) - 1.0).abs() < 1e-15);
        assert!(moment_ratio(&[1.0, 3.0]) > 1.0);
    }
}
