//! Smooth test maps with exact Jacobians and known roots.
#![allow(dead_code)]

use krylov_accel::problems::seeded_rng;
use krylov_accel::{Matrix, ResidualMap, Vector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    /// `A x + 0.1 x^3` with symmetric `A`.
    Cubic,
    /// Discrete Bratu operator `T x - h^2 exp(x)`.
    Bratu,
    /// `x - 0.5 tanh(C x)`.
    Tanh,
    /// `B x + 0.2 sin(x)`.
    Trig,
    /// `M x + 0.05 (K x)^2`.
    Quad,
}

pub const KINDS: [Kind; 5] = [Kind::Cubic, Kind::Bratu, Kind::Tanh, Kind::Trig, Kind::Quad];

/// `F(x) = G(x) - G(x*)`, so `x*` is a root.
pub struct Smooth {
    pub kind: Kind,
    a: Matrix,
    k: Matrix,
    shift: Vector,
    pub x_star: Vector,
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

impl Smooth {
    pub fn new(kind: Kind, d: usize, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let scale = 1.0 / (d as f64).sqrt();
        let eye = Matrix::identity(d, d);
        let g = gaussian(&mut rng, d, d) * scale;
        let a = match kind {
            Kind::Cubic => &eye * 2.0 + (&g + g.transpose()) * 0.15,
            Kind::Bratu => {
                let mut t = &eye * 2.0;
                for i in 0..d.saturating_sub(1) {
                    t[(i, i + 1)] = -1.0;
                    t[(i + 1, i)] = -1.0;
                }
                t
            }
            Kind::Tanh => g * 1.5,
            Kind::Trig => &eye * 2.0 + g * 0.5,
            Kind::Quad => &eye * 2.0 + g * 0.3,
        };
        let k = gaussian(&mut rng, d, d) * scale;
        let x_star = gaussian_vec(&mut rng, d) * 0.5;
        let mut s = Self {
            kind,
            a,
            k,
            shift: Vector::zeros(d),
            x_star,
        };
        s.shift = s.g(&s.x_star.clone());
        s
    }

    fn h2(&self) -> f64 {
        let h = 1.0 / (self.x_star.len() as f64 + 1.0);
        h * h
    }

    fn g(&self, x: &Vector) -> Vector {
        match self.kind {
            Kind::Cubic => &self.a * x + x.map(|v| 0.1 * v * v * v),
            Kind::Bratu => &self.a * x - x.map(|v| v.exp()) * self.h2(),
            Kind::Tanh => x - (&self.a * x).map(|v| 0.5 * v.tanh()),
            Kind::Trig => &self.a * x + x.map(|v| 0.2 * v.sin()),
            Kind::Quad => &self.a * x + (&self.k * x).map(|v| 0.05 * v * v),
        }
    }

    pub fn jacobian(&self, x: &Vector) -> Matrix {
        let d = x.len();
        match self.kind {
            Kind::Cubic => &self.a + Matrix::from_diagonal(&x.map(|v| 0.3 * v * v)),
            Kind::Bratu => &self.a - Matrix::from_diagonal(&x.map(|v| v.exp())) * self.h2(),
            Kind::Tanh => {
                let s = (&self.a * x).map(|v| 0.5 / v.cosh().powi(2));
                Matrix::identity(d, d) - Matrix::from_diagonal(&s) * &self.a
            }
            Kind::Trig => &self.a + Matrix::from_diagonal(&x.map(|v| 0.2 * v.cos())),
            Kind::Quad => &self.a + Matrix::from_diagonal(&(&self.k * x).map(|v| 0.1 * v)) * &self.k,
        }
    }
}

impl ResidualMap for Smooth {
    fn dim(&self) -> usize {
        self.x_star.len()
    }
    fn eval(&self, x: &Vector) -> Vector {
        self.g(x) - &self.shift
    }
    fn jvp_exact(&self, x: &Vector, u: &Vector) -> Option<Vector> {
        Some(self.jacobian(x) * u)
    }
    fn has_exact_jvp(&self) -> bool {
        true
    }
}
