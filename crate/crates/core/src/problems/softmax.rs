use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ops::{Matrix, ResidualMap, Vector};
use crate::stochastic::FiniteSumProblem;

use super::seeded_rng;

/// Labelled samples for multinomial logistic regression.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxDataset {
    /// One sample per row, `s x d`.
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl SoftmaxDataset {
    pub fn new(features: Matrix, labels: Vec<usize>, classes: usize) -> Result<Self> {
        let data = Self {
            features,
            labels,
            classes,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != self.features.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.features.nrows(),
                got: self.labels.len(),
            });
        }
        if self.classes < 2 {
            return Err(Error::InvalidConfig("need at least two classes".into()));
        }
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= self.classes) {
            return Err(Error::InvalidConfig(format!("label {bad} outside [0, {})", self.classes)));
        }
        if self.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("softmax features"));
        }
        let mut seen = vec![false; self.classes];
        self.labels.iter().for_each(|&l| seen[l] = true);
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidConfig("every class needs at least one sample".into()));
        }
        Ok(())
    }

    pub fn samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn features_dim(&self) -> usize {
        self.features.ncols()
    }

    /// SHA-256 over little-endian features (row-major) followed by labels.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for i in 0..self.features.nrows() {
            for j in 0..self.features.ncols() {
                h.update(self.features[(i, j)].to_le_bytes());
            }
        }
        for &l in &self.labels {
            h.update((l as u64).to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Writes `f0,...,f{d-1},label` rows.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (0..self.features_dim()).map(|j| format!("f{j}")).collect();
        header.push("label".into());
        w.write_record(&header)?;
        for i in 0..self.samples() {
            let mut row: Vec<String> = self.features.row(i).iter().map(|v| v.to_string()).collect();
            row.push(self.labels[i].to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Gaussian clusters: class means are `separation` times random unit
/// vectors, samples add standard normal noise. Labels cycle through the
/// classes before shuffling, so every class is present.
pub fn gen_synthetic_classification(s: usize, d: usize, k: usize, separation: f64, seed: u64) -> Result<SoftmaxDataset> {
    if k < 2 || s < k {
        return Err(Error::InvalidConfig(format!("need s >= k >= 2, got s = {s}, k = {k}")));
    }
    if d == 0 {
        return Err(Error::InvalidConfig("d must be >= 1".into()));
    }
    let mut rng = seeded_rng(seed);
    let means: Vec<Vector> = (0..k)
        .map(|_| {
            let u = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            u.normalize() * separation
        })
        .collect();
    let mut labels: Vec<usize> = (0..s).map(|i| i % k).collect();
    labels.shuffle(&mut rng);
    let features = Matrix::from_fn(s, d, |i, j| means[labels[i]][j] + rng.sample::<f64, _>(StandardNormal));
    SoftmaxDataset::new(features, labels, k)
}

/// Unregularized softmax cross-entropy over flattened weights.
///
/// Weights `w` of length `d k` are a column-major `d x k` matrix: class `c`
/// owns `w[c d .. (c + 1) d]`. The residual map is the gradient; its exact
/// Jacobian product is the true Hessian-vector product.
#[derive(Debug, Clone)]
pub struct SoftmaxProblem {
    pub data: SoftmaxDataset,
}

impl SoftmaxProblem {
    pub fn new(data: SoftmaxDataset) -> Result<Self> {
        data.validate()?;
        Ok(Self { data })
    }

    pub fn weights_dim(&self) -> usize {
        self.data.features_dim() * self.data.classes
    }

    fn weights(&self, w: &Vector) -> Matrix {
        Matrix::from_column_slice(self.data.features_dim(), self.data.classes, w.as_slice())
    }

    /// Row-wise class probabilities and log-sum-exp values of `X W`.
    fn probabilities(&self, w: &Vector) -> (Matrix, Vector) {
        let mut z = &self.data.features * self.weights(w);
        let mut lse = Vector::zeros(z.nrows());
        for i in 0..z.nrows() {
            let mut row = z.row_mut(i);
            let shift = row.max();
            row.apply(|v| *v = (*v - shift).exp());
            let total = row.sum();
            row /= total;
            lse[i] = shift + total.ln();
        }
        (z, lse)
    }

    /// Mean cross-entropy.
    pub fn loss(&self, w: &Vector) -> f64 {
        let z = &self.data.features * self.weights(w);
        let mut total = 0.0;
        for i in 0..z.nrows() {
            let row = z.row(i);
            let shift = row.max();
            let lse = shift + row.iter().map(|v| (v - shift).exp()).sum::<f64>().ln();
            total += lse - row[self.data.labels[i]];
        }
        total / z.nrows() as f64
    }

    /// Largest eigenvalue bound `0.5 lambda_max(X^T X / s)` of the Hessian.
    pub fn lipschitz_estimate(&self) -> f64 {
        let x = &self.data.features;
        let gram = x.transpose() * x / x.nrows() as f64;
        0.5 * gram.symmetric_eigen().eigenvalues.max()
    }

    fn residual_probs(&self, p: &mut Matrix) {
        for (i, &l) in self.data.labels.iter().enumerate() {
            p[(i, l)] -= 1.0;
        }
    }
}

impl ResidualMap for SoftmaxProblem {
    fn dim(&self) -> usize {
        self.weights_dim()
    }

    fn eval(&self, w: &Vector) -> Vector {
        let (mut p, _) = self.probabilities(w);
        self.residual_probs(&mut p);
        let g = self.data.features.transpose() * p / self.data.samples() as f64;
        Vector::from_column_slice(g.as_slice())
    }

    fn jvp_exact(&self, w: &Vector, u: &Vector) -> Option<Vector> {
        let (p, _) = self.probabilities(w);
        let a = &self.data.features * self.weights(u);
        let mut dmat = Matrix::zeros(p.nrows(), p.ncols());
        for i in 0..p.nrows() {
            let mean = p.row(i).dot(&a.row(i));
            for c in 0..p.ncols() {
                dmat[(i, c)] = p[(i, c)] * (a[(i, c)] - mean);
            }
        }
        let h = self.data.features.transpose() * dmat / self.data.samples() as f64;
        Some(Vector::from_column_slice(h.as_slice()))
    }

    fn has_exact_jvp(&self) -> bool {
        true
    }

    fn objective(&self, w: &Vector) -> Option<f64> {
        Some(self.loss(w))
    }
}

impl FiniteSumProblem for SoftmaxProblem {
    fn dim(&self) -> usize {
        self.weights_dim()
    }

    fn samples(&self) -> usize {
        self.data.samples()
    }

    fn component_grad(&self, w: &Vector, index: usize) -> Vector {
        let (p, x) = self.sample_probs(w, index);
        let d = self.data.features_dim();
        let label = self.data.labels[index];
        Vector::from_fn(self.weights_dim(), |r, _| {
            let (c, j) = (r / d, r % d);
            x[j] * (p[c] - if c == label { 1.0 } else { 0.0 })
        })
    }

    fn component_hvp(&self, w: &Vector, index: usize, u: &Vector) -> Vector {
        let (p, x) = self.sample_probs(w, index);
        let d = self.data.features_dim();
        let a = self.weights(u).transpose() * &x;
        let mean = p.dot(&a);
        Vector::from_fn(self.weights_dim(), |r, _| {
            let (c, j) = (r / d, r % d);
            x[j] * p[c] * (a[c] - mean)
        })
    }

    fn objective(&self, w: &Vector) -> Option<f64> {
        Some(self.loss(w))
    }
}

impl SoftmaxProblem {
    fn sample_probs(&self, w: &Vector, index: usize) -> (Vector, Vector) {
        let x: Vector = self.data.features.row(index).transpose();
        let mut z = self.weights(w).transpose() * &x;
        let shift = z.max();
        z.apply(|v| *v = (*v - shift).exp());
        let total = z.sum();
        (z / total, x)
    }
}
