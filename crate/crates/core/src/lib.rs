//! Matrix-free truncated GCR solvers for linear systems, the nonlinear TGCR
//! accelerator, Anderson mixing, stochastic subsampled variants, diagnostics
//! for the quasi-Newton identities, problem generators and a benchmark harness.

pub mod anderson;
pub mod bench;
pub mod diagnostics;
pub mod error;
pub mod linear;
pub mod nonlinear;
pub mod ops;
pub mod problems;
pub mod stochastic;
pub mod trace;
pub mod window;

pub use error::{Error, Result};
pub use ops::{
    frechet_jvp, AffineResidual, CountingMap, CsrOperator, DenseOperator, FnResidual, FrechetPolicy,
    LinearOperator, Matrix, ResidualMap, Structure, Vector,
};
pub use trace::{SolveTrace, StepCoefficient, StepRecord, Termination};
pub use window::{window_orthonormalize, DirectionWindow, WindowMode};
