use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ops::{AffineResidual, DenseOperator, Matrix, Structure, Vector};

use super::seeded_rng;

/// Smallest singular value of generated nonsymmetric payoffs.
const SINGULAR_FLOOR: f64 = 0.1;

/// `min_x max_y x^T A y + b^T x + c^T y`, played by simultaneous gradient
/// descent-ascent with step `eta`.
#[derive(Debug, Clone)]
pub struct BilinearGame {
    pub a: Matrix,
    pub b: Vector,
    pub c: Vector,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearOptions {
    /// Symmetric positive definite payoff with eigenvalues in `[1, cond]`;
    /// otherwise a Gaussian matrix with a singular-value floor.
    pub spd: bool,
    pub cond: f64,
    /// Draw `b` and `c`; when false both are zero.
    pub random_linear_terms: bool,
    /// GDA step; `None` uses `0.5 / |A|_2` from power iteration.
    pub eta: Option<f64>,
}

impl Default for BilinearOptions {
    fn default() -> Self {
        Self {
            spd: true,
            cond: 10.0,
            random_linear_terms: true,
            eta: None,
        }
    }
}

impl BilinearGame {
    pub fn new(a: Matrix, b: Vector, c: Vector, eta: f64) -> Result<Self> {
        let d = a.nrows();
        if a.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: a.ncols(),
            });
        }
        if b.len() != d || c.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: b.len().max(c.len()),
            });
        }
        if !(eta > 0.0) {
            return Err(Error::InvalidConfig("eta must be positive".into()));
        }
        let sv = a.clone().singular_values();
        if !(sv.min() > 1e-12 * sv.max()) {
            return Err(Error::InvalidConfig("payoff matrix is singular".into()));
        }
        Ok(Self { a, b, c, eta })
    }

    pub fn d(&self) -> usize {
        self.a.nrows()
    }

    /// `M = [[I, -eta A], [eta A^T, I]]`, acting on stacked `(x, y)`.
    pub fn gda_matrix(&self) -> Matrix {
        let d = self.d();
        let mut m = Matrix::identity(2 * d, 2 * d);
        m.view_mut((0, d), (d, d)).copy_from(&(-&self.a * self.eta));
        m.view_mut((d, 0), (d, d)).copy_from(&(self.a.transpose() * self.eta));
        m
    }

    /// Offset `s = (-eta b, eta c)` of the GDA map `w -> M w + s`.
    pub fn gda_offset(&self) -> Vector {
        let d = self.d();
        Vector::from_fn(2 * d, |i, _| {
            if i < d {
                -self.eta * self.b[i]
            } else {
                self.eta * self.c[i - d]
            }
        })
    }

    /// The GDA step as an operator.
    pub fn gda_operator(&self) -> DenseOperator {
        DenseOperator::general(self.gda_matrix()).expect("finite square matrix")
    }

    /// `F(w) = w - (M w + s) = (I - M) w - s`; `I - M` is skew-symmetric.
    pub fn residual(&self) -> AffineResidual<DenseOperator> {
        let n = 2 * self.d();
        let k = Matrix::identity(n, n) - self.gda_matrix();
        let op = DenseOperator::new(k, Structure::SkewLike).expect("finite square matrix");
        AffineResidual::new(op, self.gda_offset()).expect("matching dimensions")
    }

    /// Saddle point `(x*, y*)` with `A y* = -b` and `A^T x* = -c`, stacked.
    pub fn saddle(&self) -> Vector {
        let lu = self.a.clone().lu();
        let y = lu.solve(&(-&self.b)).expect("nonsingular payoff");
        let x = self.a.transpose().lu().solve(&(-&self.c)).expect("nonsingular payoff");
        let d = self.d();
        Vector::from_fn(2 * d, |i, _| if i < d { x[i] } else { y[i - d] })
    }
}

fn power_norm(a: &Matrix, rng: &mut impl Rng) -> f64 {
    let n = a.ncols();
    let mut v = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
    let mut est = 0.0;
    for _ in 0..200 {
        let w = a.transpose() * (a * &v);
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        let next = nw.sqrt();
        v = w / nw;
        if (next - est).abs() <= 1e-12 * next {
            return next;
        }
        est = next;
    }
    est
}

/// Seeded bilinear game of dimension `d`.
pub fn gen_bilinear_game(d: usize, opts: BilinearOptions, seed: u64) -> Result<BilinearGame> {
    if d == 0 {
        return Err(Error::InvalidConfig("d must be >= 1".into()));
    }
    let mut rng = seeded_rng(seed);
    let a = if opts.spd {
        if !(opts.cond >= 1.0) {
            return Err(Error::InvalidConfig("cond must be >= 1".into()));
        }
        let g = Matrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = g.qr().q();
        let eig = Vector::from_fn(d, |i, _| {
            if d == 1 {
                1.0
            } else {
                1.0 + (opts.cond - 1.0) * i as f64 / (d - 1) as f64
            }
        });
        &q * Matrix::from_diagonal(&eig) * q.transpose()
    } else {
        let g = Matrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal) / (d as f64).sqrt());
        let mut svd = g.svd(true, true);
        svd.singular_values.apply(|s| *s = s.max(SINGULAR_FLOOR));
        svd.recompose().expect("u and v computed")
    };
    let (b, c) = if opts.random_linear_terms {
        (
            Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal)),
            Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal)),
        )
    } else {
        (Vector::zeros(d), Vector::zeros(d))
    };
    let eta = match opts.eta {
        Some(eta) => eta,
        None => 0.5 / power_norm(&a, &mut rng),
    };
    BilinearGame::new(a, b, c, eta)
}
