//! Seeded generators for every experiment family, plus MatrixMarket I/O.

mod bilinear;
mod linear_systems;
mod matrix_market;
mod softmax;

pub use bilinear::{gen_bilinear_game, BilinearGame, BilinearOptions};
pub use linear_systems::{gen_linear_system, LinearFamily, LinearSystem, SpectralOperator};
pub use matrix_market::{load_matrix_market, read_matrix_market, write_matrix_market};
pub use softmax::{gen_synthetic_classification, SoftmaxDataset, SoftmaxProblem};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator RNG: ChaCha8 seeded from a `u64`.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
