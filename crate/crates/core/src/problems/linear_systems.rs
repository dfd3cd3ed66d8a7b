use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ops::{DenseOperator, LinearOperator, Matrix, Structure, Vector};

use super::seeded_rng;

/// Householder reflectors composing the eigenvector basis of spectral operators.
const REFLECTORS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearFamily {
    /// Eigenvalues in `[1, cond]`, both endpoints attained.
    Spd { cond: f64 },
    /// Eigenvalues in `[-kappa_minus, -1]` (a `split` fraction of them) and
    /// `[1, kappa_plus]`, all four endpoints attained.
    SymIndef {
        kappa_plus: f64,
        kappa_minus: f64,
        split: f64,
    },
    /// Dense `2 I + G / sqrt(n)` with standard normal `G`.
    General,
}

/// `Q diag(lambda) Q^T` with `Q` a product of Householder reflectors; applied
/// in `O(n)` per reflector without forming `Q`.
#[derive(Debug, Clone)]
pub struct SpectralOperator {
    reflectors: Vec<Vector>,
    eigenvalues: Vector,
    structure: Structure,
}

impl SpectralOperator {
    pub fn new(eigenvalues: Vector, reflectors: Vec<Vector>, structure: Structure) -> Result<Self> {
        for u in &reflectors {
            if u.len() != eigenvalues.len() {
                return Err(Error::DimensionMismatch {
                    expected: eigenvalues.len(),
                    got: u.len(),
                });
            }
            if (u.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidConfig("reflector vectors must have unit norm".into()));
            }
        }
        Ok(Self {
            reflectors,
            eigenvalues,
            structure,
        })
    }

    pub fn eigenvalues(&self) -> &Vector {
        &self.eigenvalues
    }

    fn reflect(u: &Vector, x: &mut Vector) {
        let c = 2.0 * u.dot(x);
        x.axpy(-c, u, 1.0);
    }
}

impl LinearOperator for SpectralOperator {
    fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    fn apply(&self, x: &Vector) -> Vector {
        // Q = H_1 H_2 ... H_k, so Q^T x applies H_1 first.
        let mut y = x.clone();
        for u in &self.reflectors {
            Self::reflect(u, &mut y);
        }
        y.component_mul_assign(&self.eigenvalues);
        for u in self.reflectors.iter().rev() {
            Self::reflect(u, &mut y);
        }
        y
    }

    fn structure(&self) -> Structure {
        self.structure
    }

    fn to_dense(&self) -> Option<Matrix> {
        let n = self.dim();
        let mut m = Matrix::zeros(n, n);
        for j in 0..n {
            let e = Vector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 });
            m.set_column(j, &self.apply(&e));
        }
        Some(m)
    }
}

/// A generated system `A x = b` with `b = A x_true` and its spectral data.
pub struct LinearSystem {
    pub op: Box<dyn LinearOperator>,
    pub b: Vector,
    pub x_true: Vector,
    /// Declared condition numbers of the construction (`kappa` for SPD,
    /// `kappa_plus`/`kappa_minus` for indefinite; `None` for general).
    pub kappa: Option<f64>,
    pub kappa_plus: Option<f64>,
    pub kappa_minus: Option<f64>,
    pub eigenvalues: Option<Vector>,
}

fn interval(rng: &mut impl Rng, count: usize, lo: f64, hi: f64) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let mut vals = vec![lo, hi];
            vals.extend((2..count).map(|_| rng.random_range(lo..=hi)));
            vals
        }
    }
}

/// Seeded test system of dimension `n`. With `unit_norm` the operator is
/// rescaled to unit 2-norm (spectral families only; condition numbers are
/// unchanged).
pub fn gen_linear_system(n: usize, family: LinearFamily, unit_norm: bool, seed: u64) -> Result<LinearSystem> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("n = {n} must be >= 2")));
    }
    let mut rng = seeded_rng(seed);
    let (op, kappa, kappa_plus, kappa_minus, eigenvalues): (Box<dyn LinearOperator>, _, _, _, _) = match family {
        LinearFamily::General => {
            let scale = 1.0 / (n as f64).sqrt();
            let g = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal) * scale);
            let mut a = g + Matrix::identity(n, n) * 2.0;
            if unit_norm {
                let s = a.clone().singular_values().max();
                a /= s;
            }
            (Box::new(DenseOperator::general(a)?), None, None, None, None)
        }
        LinearFamily::Spd { cond } => {
            if !(cond >= 1.0 && cond.is_finite()) {
                return Err(Error::InvalidConfig(format!("cond = {cond} must be >= 1")));
            }
            let mut eig = interval(&mut rng, n, 1.0, cond);
            if unit_norm {
                eig.iter_mut().for_each(|e| *e /= cond);
            }
            let eig = Vector::from_vec(eig);
            let op = spectral(&mut rng, eig.clone(), Structure::SymmetricPositiveDefinite)?;
            (Box::new(op), Some(cond), None, None, Some(eig))
        }
        LinearFamily::SymIndef {
            kappa_plus,
            kappa_minus,
            split,
        } => {
            if !(kappa_plus >= 1.0 && kappa_minus >= 1.0 && kappa_plus.is_finite() && kappa_minus.is_finite()) {
                return Err(Error::InvalidConfig("kappa_plus and kappa_minus must be >= 1".into()));
            }
            if !(split > 0.0 && split < 1.0) {
                return Err(Error::InvalidConfig(format!("split = {split} not in (0, 1)")));
            }
            let n_neg = ((split * n as f64).round() as usize).clamp(1, n - 1);
            let mut eig: Vec<f64> = interval(&mut rng, n_neg, 1.0, kappa_minus).into_iter().map(|e| -e).collect();
            eig.extend(interval(&mut rng, n - n_neg, 1.0, kappa_plus));
            if unit_norm {
                let s = kappa_plus.max(kappa_minus);
                eig.iter_mut().for_each(|e| *e /= s);
            }
            let eig = Vector::from_vec(eig);
            let op = spectral(&mut rng, eig.clone(), Structure::SymmetricIndefinite)?;
            (Box::new(op), None, Some(kappa_plus), Some(kappa_minus), Some(eig))
        }
    };
    let x_true = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let b = op.apply(&x_true);
    Ok(LinearSystem {
        op,
        b,
        x_true,
        kappa,
        kappa_plus,
        kappa_minus,
        eigenvalues,
    })
}

fn spectral(rng: &mut impl Rng, eig: Vector, structure: Structure) -> Result<SpectralOperator> {
    let n = eig.len();
    let reflectors = (0..REFLECTORS)
        .map(|_| {
            let u = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            u.normalize()
        })
        .collect();
    SpectralOperator::new(eig, reflectors, structure)
}
