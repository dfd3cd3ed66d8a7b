//! Checks of the quasi-Newton identities behind nlTGCR, the classical Krylov
//! convergence bounds, and an empirical rate classifier for traces.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ops::{Matrix, Vector};
use crate::trace::SolveTrace;
use crate::window::DirectionWindow;

/// Largest dimension for which dense inverse-Jacobian matrices are formed.
pub const DENSE_LIMIT: usize = 2048;

/// `G = P V^T = sum_i p_i v_i^T` over the stored pairs.
pub fn build_inverse_jacobian(window: &DirectionWindow) -> Result<Matrix> {
    let first = window
        .pairs()
        .next()
        .ok_or(Error::InsufficientData { needed: 1, got: 0 })?;
    let n = first.p.len();
    if n > DENSE_LIMIT {
        return Err(Error::DimensionTooLarge {
            dim: n,
            limit: DENSE_LIMIT,
        });
    }
    Ok(window.p_matrix() * window.v_matrix().transpose())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecantReport {
    /// `|G v_j - p_j|` for the newest pair.
    pub secant_residual: f64,
    /// `max |G q|` over unit probes `q` orthogonal to every `v_i`; 0 when
    /// the `v_i` span the whole space.
    pub nochange_max: f64,
    /// `|G V - P|_F`.
    pub multisecant_residual: f64,
    /// Filled by [`verify_inverse_optimality`] callers; `None` here.
    pub optimality_gap: Option<f64>,
}

/// Orthonormal basis of the orthogonal complement of `span(cols)`.
fn complement_basis(v: &Matrix) -> Matrix {
    let n = v.nrows();
    let k = v.ncols();
    if k == 0 {
        return Matrix::identity(n, n);
    }
    let svd = v.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let lead = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-12 * lead).count();
    // Full U from a QR of [U_r | I].
    let mut stacked = Matrix::zeros(n, rank + n);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    for (c, &i) in order.iter().take(rank).enumerate() {
        stacked.set_column(c, &u.column(i));
    }
    for i in 0..n {
        stacked[(i, rank + i)] = 1.0;
    }
    let q = stacked.qr().q();
    let full = if q.ncols() >= n { q.columns(0, n).into_owned() } else { q };
    full.columns(rank, n - rank).into_owned()
}

/// Secant, no-change and multisecant residuals of `G` against a window,
/// using `probes` random vectors from the orthogonal complement of `span(V)`.
pub fn verify_secant_nochange<R: Rng + ?Sized>(
    g: &Matrix,
    window: &DirectionWindow,
    probes: usize,
    rng: &mut R,
) -> SecantReport {
    let Some(newest) = window.newest() else {
        return SecantReport {
            secant_residual: 0.0,
            nochange_max: 0.0,
            multisecant_residual: 0.0,
            optimality_gap: None,
        };
    };
    let secant_residual = (g * &newest.v - &newest.p).norm();
    let v = window.v_matrix();
    let multisecant_residual = (g * &v - window.p_matrix()).norm();
    let comp = complement_basis(&v);
    let mut nochange_max: f64 = 0.0;
    if comp.ncols() > 0 {
        for _ in 0..probes {
            let z = Vector::from_fn(comp.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
            let q = &comp * z;
            let qn = q.norm();
            if qn > 0.0 {
                nochange_max = nochange_max.max((g * q).norm() / qn);
            }
        }
    }
    SecantReport {
        secant_residual,
        nochange_max,
        multisecant_residual,
        optimality_gap: None,
    }
}

/// `min over candidates G' of |G' J - I|_F - |G J - I|_F` with `G = P V^T`.
///
/// Candidates are `G' = G + W`, `W = Z V^T` for random `Z` projected so that
/// `W V = 0`; this keeps the row space of `G'` inside `span(V)` and the
/// multisecant condition `G' V = P` intact. Returns `+inf` for zero candidates.
pub fn verify_inverse_optimality<R: Rng + ?Sized>(
    window: &DirectionWindow,
    j_dense: &Matrix,
    candidates: usize,
    rng: &mut R,
) -> Result<f64> {
    let g = build_inverse_jacobian(window)?;
    let n = g.nrows();
    if j_dense.nrows() != n || j_dense.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: j_dense.nrows(),
        });
    }
    if candidates == 0 {
        return Ok(f64::INFINITY);
    }
    let eye = Matrix::identity(n, n);
    let base = (&g * j_dense - &eye).norm();
    let v = window.v_matrix();
    let k = v.ncols();
    let gram = v.transpose() * &v;
    let gram_proj = &gram * gram.clone().pseudo_inverse(1e-12).expect("square gram");
    let mut gap = f64::INFINITY;
    for _ in 0..candidates {
        let z = Matrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
        // W V = Z (V^T V) vanishes iff Z annihilates range(V^T V).
        let z = &z - &z * &gram_proj;
        let candidate = &g + z * v.transpose();
        gap = gap.min((candidate * j_dense - &eye).norm() - base);
    }
    Ok(gap)
}

fn check_kappa(kappa: f64, what: &str) -> Result<()> {
    if kappa >= 1.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{what} = {kappa} must be a finite value >= 1")))
    }
}

/// `2 ((sqrt(kappa) - 1) / (sqrt(kappa) + 1))^k`.
pub fn spd_bound(kappa: f64, k: usize) -> Result<f64> {
    check_kappa(kappa, "kappa")?;
    let s = kappa.sqrt();
    Ok(2.0 * ((s - 1.0) / (s + 1.0)).powi(k as i32))
}

/// `2 ((sqrt(k+ k-) - 1) / (sqrt(k+ k-) + 1))^floor(m / 2)`.
pub fn indefinite_bound(kappa_plus: f64, kappa_minus: f64, m: usize) -> Result<f64> {
    check_kappa(kappa_plus, "kappa_plus")?;
    check_kappa(kappa_minus, "kappa_minus")?;
    let s = (kappa_plus * kappa_minus).sqrt();
    Ok(2.0 * ((s - 1.0) / (s + 1.0)).powi((m / 2) as i32))
}

/// Convergence class of a trace tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateClass {
    /// Geometric-mean ratio over the tail.
    Linear(f64),
    Superlinear,
    Stagnant,
}

/// Minimum number of positive samples `estimate_rate` needs.
pub const MIN_RATE_SAMPLES: usize = 5;

/// Classifies a sequence of positive errors or residuals from its last five
/// ratios `e_{k+1} / e_k`: superlinear when every ratio is at most 0.9 times
/// its predecessor, stagnant when the geometric mean is at least 0.999, and
/// linear with that mean otherwise. Exact zeros end the sequence.
pub fn classify_sequence(values: &[f64]) -> Result<RateClass> {
    let seq: Vec<f64> = values.iter().copied().take_while(|&e| e > 0.0).collect();
    if seq.len() < MIN_RATE_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_RATE_SAMPLES,
            got: seq.len(),
        });
    }
    let ratios: Vec<f64> = seq.windows(2).map(|w| w[1] / w[0]).collect();
    let tail = &ratios[ratios.len().saturating_sub(5)..];
    let mean = (tail.iter().map(|r| r.ln()).sum::<f64>() / tail.len() as f64).exp();
    if mean >= 0.999 {
        return Ok(RateClass::Stagnant);
    }
    if tail.windows(2).all(|w| w[1] <= 0.9 * w[0]) {
        return Ok(RateClass::Superlinear);
    }
    Ok(RateClass::Linear(mean))
}

/// [`classify_sequence`] on `|x_j - x*|` when `x_star` and stored iterates are
/// available, otherwise on the residual norms.
pub fn estimate_rate(trace: &SolveTrace, x_star: Option<&Vector>) -> Result<RateClass> {
    match (x_star, &trace.iterates) {
        (Some(xs), Some(its)) => {
            let errors: Vec<f64> = its.iter().map(|x| (x - xs).norm()).collect();
            classify_sequence(&errors)
        }
        _ => classify_sequence(&trace.residual_norms),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::window::WindowMode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(entries: &[f64]) -> Vector {
        Vector::from_column_slice(entries)
    }

    #[test]
    fn rank_one_inverse() {
        let mut w = DirectionWindow::new(2, WindowMode::MovingWindow).unwrap();
        w.push(v(&[2.0, 0.0]), v(&[1.0, 0.0]));
        let g = build_inverse_jacobian(&w).unwrap();
        assert_eq!(g, Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn full_orthonormal_window_gives_identity() {
        let mut w = DirectionWindow::new(2, WindowMode::MovingWindow).unwrap();
        let s = 0.5f64.sqrt();
        w.push(v(&[s, s]), v(&[s, s]));
        w.push(v(&[s, -s]), v(&[s, -s]));
        let g = build_inverse_jacobian(&w).unwrap();
        assert!((&g - Matrix::identity(2, 2)).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rep = verify_secant_nochange(&g, &w, 10, &mut rng);
        assert_eq!(rep.nochange_max, 0.0);
        assert!(rep.secant_residual < 1e-15);
    }

    #[test]
    fn empty_window_rejected() {
        let w = DirectionWindow::new(2, WindowMode::MovingWindow).unwrap();
        assert!(build_inverse_jacobian(&w).is_err());
    }

    #[test]
    fn perturbation_is_detected() {
        let mut w = DirectionWindow::new(2, WindowMode::MovingWindow).unwrap();
        w.push(v(&[1.0, 2.0, 0.0]), v(&[0.0, 1.0, 0.0]));
        let g = build_inverse_jacobian(&w).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let exact = verify_secant_nochange(&g, &w, 20, &mut rng);
        assert!(exact.secant_residual < 1e-15);
        assert!(exact.nochange_max < 1e-15);
        let noisy = &g + Matrix::identity(3, 3) * 1e-3;
        let rep = verify_secant_nochange(&noisy, &w, 20, &mut rng);
        assert!((rep.secant_residual - 1e-3).abs() < 1e-12);
        assert!((rep.nochange_max - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn exact_inverse_has_no_gap() {
        // V = I, P = J^{-1} V.
        let j = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 1.0]);
        let jinv = j.clone().try_inverse().unwrap();
        let mut w = DirectionWindow::new(2, WindowMode::MovingWindow).unwrap();
        for i in 0..2 {
            let e = Vector::from_fn(2, |r, _| if r == i { 1.0 } else { 0.0 });
            w.push(&jinv * &e, e);
        }
        let g = build_inverse_jacobian(&w).unwrap();
        assert!((g * &j - Matrix::identity(2, 2)).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(verify_inverse_optimality(&w, &j, 50, &mut rng).unwrap() >= -1e-12);
        assert_eq!(verify_inverse_optimality(&w, &j, 0, &mut rng).unwrap(), f64::INFINITY);
    }

    #[test]
    fn bound_values() {
        assert_eq!(spd_bound(1.0, 3).unwrap(), 0.0);
        assert!((spd_bound(9.0, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!((spd_bound(9.0, 4).unwrap() - 0.125).abs() < 1e-15);
        assert!(spd_bound(0.5, 1).is_err());
        assert_eq!(indefinite_bound(1.0, 1.0, 2).unwrap(), 0.0);
        assert!((indefinite_bound(9.0, 9.0, 2).unwrap() - 1.6).abs() < 1e-14);
        assert!((indefinite_bound(9.0, 9.0, 3).unwrap() - 1.6).abs() < 1e-14);
        assert_eq!(indefinite_bound(4.0, 4.0, 0).unwrap(), 2.0);
        assert!(indefinite_bound(0.0, 4.0, 2).is_err());
    }

    #[test]
    fn bounds_are_monotone() {
        for k in 0..30 {
            assert!(spd_bound(50.0, k + 1).unwrap() <= spd_bound(50.0, k).unwrap());
            assert!(spd_bound(50.0, k).unwrap() <= spd_bound(60.0, k).unwrap());
            assert!(indefinite_bound(4.0, 5.0, k + 1).unwrap() <= indefinite_bound(4.0, 5.0, k).unwrap());
            assert!(indefinite_bound(4.0, 5.0, k).unwrap() <= indefinite_bound(4.0, 6.0, k).unwrap());
        }
    }

    #[test]
    fn rate_classes() {
        let geometric: Vec<f64> = (0..10).map(|k| 0.5f64.powi(k)).collect();
        match classify_sequence(&geometric).unwrap() {
            RateClass::Linear(rho) => assert!((rho - 0.5).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            classify_sequence(&[1.0, 1e-1, 1e-3, 1e-7, 1e-15]).unwrap(),
            RateClass::Superlinear
        );
        assert_eq!(classify_sequence(&[1.0; 8]).unwrap(), RateClass::Stagnant);
        assert!(matches!(
            classify_sequence(&[1.0, 0.5, 0.25]),
            Err(Error::InsufficientData { needed: 5, got: 3 })
        ));
    }
}
