//! Bounded history of search directions `p_i` and their images `v_i = J p_i`.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::ops::{Matrix, Vector};

/// Eviction policy of a [`DirectionWindow`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowMode {
    /// Drop the oldest pair once `capacity` pairs are stored.
    #[default]
    MovingWindow,
    /// Keep everything until the owner calls [`DirectionWindow::clear`].
    Restart,
}

#[derive(Debug, Clone)]
pub struct DirectionPair {
    pub p: Vector,
    pub v: Vector,
}

/// Paired history `{(p_i, v_i)}` with mutually orthonormal `v_i`.
#[derive(Debug, Clone)]
pub struct DirectionWindow {
    capacity: usize,
    mode: WindowMode,
    pairs: VecDeque<DirectionPair>,
    second_pass: bool,
}

impl DirectionWindow {
    /// `capacity` is the table size `m`; use `usize::MAX` for an unbounded window.
    pub fn new(capacity: usize, mode: WindowMode) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig("window capacity must be >= 1".into()));
        }
        Ok(Self {
            capacity,
            mode,
            pairs: VecDeque::new(),
            second_pass: false,
        })
    }

    /// Enables a second Gram-Schmidt sweep during orthonormalization.
    pub fn with_second_pass(mut self, enabled: bool) -> Self {
        self.second_pass = enabled;
        self
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn mode(&self) -> WindowMode {
        self.mode
    }

    pub fn second_pass(&self) -> bool {
        self.second_pass
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }

    /// Pairs ordered oldest first.
    pub fn pairs(&self) -> impl ExactSizeIterator<Item = &DirectionPair> {
        self.pairs.iter()
    }

    pub fn newest(&self) -> Option<&DirectionPair> {
        self.pairs.back()
    }

    /// Stores a pair. In moving-window mode the oldest pair is evicted when full;
    /// in restart mode a full window is cleared first.
    pub fn push(&mut self, p: Vector, v: Vector) {
        if self.pairs.len() >= self.capacity {
            match self.mode {
                WindowMode::MovingWindow => {
                    self.pairs.pop_front();
                }
                WindowMode::Restart => self.pairs.clear(),
            }
        }
        self.pairs.push_back(DirectionPair { p, v });
    }

    /// `V^T r`, oldest pair first.
    pub fn project(&self, r: &Vector) -> Vector {
        Vector::from_iterator(self.pairs.len(), self.pairs.iter().map(|pair| pair.v.dot(r)))
    }

    /// `P y`.
    pub fn combine_p(&self, y: &Vector) -> Vector {
        self.combine(y, |pair| &pair.p)
    }

    /// `V y`.
    pub fn combine_v(&self, y: &Vector) -> Vector {
        self.combine(y, |pair| &pair.v)
    }

    fn combine<'a>(&'a self, y: &Vector, pick: impl Fn(&'a DirectionPair) -> &'a Vector) -> Vector {
        assert_eq!(y.len(), self.pairs.len(), "coefficient length");
        let n = self.pairs.front().map_or(0, |pair| pair.p.len());
        let mut out = Vector::zeros(n);
        for (pair, &c) in self.pairs.iter().zip(y.iter()) {
            out.axpy(c, pick(pair), 1.0);
        }
        out
    }

    /// Columns `[p_i0, ..., p_j]`.
    pub fn p_matrix(&self) -> Matrix {
        self.columns(|pair| &pair.p)
    }

    /// Columns `[v_i0, ..., v_j]`.
    pub fn v_matrix(&self) -> Matrix {
        self.columns(|pair| &pair.v)
    }

    fn columns<'a>(&'a self, pick: impl Fn(&'a DirectionPair) -> &'a Vector) -> Matrix {
        let n = self.pairs.front().map_or(0, |pair| pair.p.len());
        let cols: Vec<Vector> = self.pairs.iter().map(|pair| pick(pair).clone()).collect();
        if cols.is_empty() {
            Matrix::zeros(n, 0)
        } else {
            Matrix::from_columns(&cols)
        }
    }

    /// Largest `|(v_i, v_j) - delta_ij|` over stored pairs.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.pairs.iter().enumerate() {
            for (j, b) in self.pairs.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.v.dot(&b.v) - target).abs());
            }
        }
        worst
    }
}

/// Result of orthonormalizing a candidate pair against a window.
#[derive(Debug, Clone)]
pub struct Orthonormalized {
    pub p: Vector,
    pub v: Vector,
    /// Modified Gram-Schmidt coefficients, oldest pair first (first sweep).
    pub betas: Vec<f64>,
    /// Length-n inner products spent, including the final norm.
    pub dot_products: usize,
}

/// Orthogonalizes `v` against every stored `v_i` (applying the same
/// combination to `p`) and normalizes both by the final `|v|`.
///
/// Fails with [`Error::Breakdown`] when the remaining `|v|` falls below
/// `1e-14 * max(1, |v_input|)`.
pub fn window_orthonormalize(p: &Vector, v: &Vector, window: &DirectionWindow) -> Result<Orthonormalized> {
    let tol = 1e-14 * v.norm().max(1.0);
    let mut p = p.clone();
    let mut v = v.clone();
    let mut betas = Vec::with_capacity(window.len());
    let mut dots = 0;
    let sweeps = if window.second_pass { 2 } else { 1 };
    for sweep in 0..sweeps {
        for (i, pair) in window.pairs().enumerate() {
            let beta = v.dot(&pair.v);
            dots += 1;
            p.axpy(-beta, &pair.p, 1.0);
            v.axpy(-beta, &pair.v, 1.0);
            if sweep == 0 {
                betas.push(beta);
            } else {
                betas[i] += beta;
            }
        }
    }
    let norm = v.norm();
    dots += 1;
    if !norm.is_finite() {
        return Err(Error::NonFinite("window orthonormalization"));
    }
    if norm < tol {
        return Err(Error::Breakdown { norm, tol });
    }
    Ok(Orthonormalized {
        p: p / norm,
        v: v / norm,
        betas,
        dot_products: dots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vec2(a: f64, b: f64) -> Vector {
        Vector::from_vec(vec![a, b])
    }

    #[test]
    fn empty_window_only_normalizes() {
        let w = DirectionWindow::new(3, WindowMode::MovingWindow).unwrap();
        let out = window_orthonormalize(&vec2(1.0, 1.0), &vec2(1.0, 2.0), &w).unwrap();
        let s5 = 5f64.sqrt();
        assert!((out.p - vec2(1.0 / s5, 1.0 / s5)).norm() < 1e-15);
        assert!((out.v - vec2(1.0 / s5, 2.0 / s5)).norm() < 1e-15);
        assert!(out.betas.is_empty());
    }

    #[test]
    fn dependent_direction_breaks_down() {
        let mut w = DirectionWindow::new(3, WindowMode::MovingWindow).unwrap();
        w.push(vec2(1.0, 0.0), vec2(1.0, 0.0));
        let err = window_orthonormalize(&vec2(1.0, 0.0), &vec2(1.0, 0.0), &w).unwrap_err();
        assert!(matches!(err, Error::Breakdown { .. }));
    }

    #[test]
    fn single_mgs_step_on_diag_system() {
        // Second TGCR step on diag(1, 2), b = (1, 1); worked by hand.
        let s5 = 5f64.sqrt();
        let mut w = DirectionWindow::new(1, WindowMode::MovingWindow).unwrap();
        w.push(vec2(1.0 / s5, 1.0 / s5), vec2(1.0 / s5, 2.0 / s5));
        let out = window_orthonormalize(&vec2(0.4, -0.2), &vec2(0.4, -0.4), &w).unwrap();
        assert_eq!(out.betas.len(), 1);
        assert!((out.betas[0] + 0.4 / s5).abs() < 1e-15);
        assert!((out.p - vec2(0.894_427_191, -0.223_606_797_7)).norm() < 1e-9);
        assert!((out.v - vec2(0.894_427_191, -0.447_213_595_5)).norm() < 1e-9);
    }

    #[test]
    fn moving_window_evicts_oldest() {
        let mut w = DirectionWindow::new(2, WindowMode::MovingWindow).unwrap();
        for k in 0..4 {
            w.push(Vector::from_element(1, k as f64), Vector::from_element(1, k as f64));
        }
        let ps: Vec<f64> = w.pairs().map(|pair| pair.p[0]).collect();
        assert_eq!(ps, vec![2.0, 3.0]);
    }

    #[test]
    fn restart_window_clears_when_full() {
        let mut w = DirectionWindow::new(2, WindowMode::Restart).unwrap();
        for k in 0..3 {
            w.push(Vector::from_element(1, k as f64), Vector::from_element(1, k as f64));
        }
        assert_eq!(w.len(), 1);
        assert_eq!(w.newest().unwrap().p[0], 2.0);
    }

    #[test]
    fn zero_capacity_rejected() {
        assert!(DirectionWindow::new(0, WindowMode::MovingWindow).is_err());
    }

    fn random_vec(seed: &[f64], n: usize, offset: usize) -> Vector {
        Vector::from_fn(n, |i, _| seed[(i + offset) % seed.len()] + 0.1 * (i as f64 + offset as f64).sin())
    }

    proptest! {
        #[test]
        fn inserted_directions_stay_orthonormal(
            entries in proptest::collection::vec(-1.0f64..1.0, 16..64),
            m in 1usize..5,
            steps in 1usize..8,
        ) {
            let n = 6;
            let mut w = DirectionWindow::new(m, WindowMode::MovingWindow).unwrap();
            for k in 0..steps {
                let p = random_vec(&entries, n, 3 * k);
                let v = random_vec(&entries, n, 3 * k + 1);
                match window_orthonormalize(&p, &v, &w) {
                    Ok(out) => {
                        w.push(out.p, out.v);
                        prop_assert!(w.orthonormality_defect() <= 1e-10);
                        prop_assert!(w.len() <= m);
                    }
                    Err(Error::Breakdown { .. }) => {}
                    Err(e) => return Err(TestCaseError::fail(e.to_string())),
                }
            }
        }

        #[test]
        fn reorthonormalizing_output_is_idempotent(
            entries in proptest::collection::vec(-1.0f64..1.0, 16..64),
        ) {
            let n = 5;
            let mut w = DirectionWindow::new(3, WindowMode::MovingWindow).unwrap();
            for k in 0..3 {
                if let Ok(out) = window_orthonormalize(&random_vec(&entries, n, k), &random_vec(&entries, n, k + 7), &w) {
                    w.push(out.p, out.v);
                }
            }
            if let Ok(out) = window_orthonormalize(&random_vec(&entries, n, 11), &random_vec(&entries, n, 13), &w) {
                let again = window_orthonormalize(&out.p, &out.v, &w).unwrap();
                for b in again.betas {
                    prop_assert!(b.abs() <= 1e-10);
                }
            }
        }
    }
}
