//! Deterministic random streams.
//!
//! Every independent unit of work (a tree, a fold, an epoch) draws from its own
//! ChaCha stream keyed by the user seed and a path of integers naming the unit.
//! Results therefore do not depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags, so that e.g. tree 3 and epoch 3 never share a stream.
pub mod tag {
    pub const FOLDS: u64 = 1;
    pub const FOREST_TREE: u64 = 2;
    pub const MLP_INIT: u64 = 3;
    pub const MLP_EPOCH: u64 = 4;
    pub const SIM_NOISE: u64 = 5;
    pub const CV_FOLD: u64 = 6;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Returns the generator for the unit identified by `path` under `seed`.
pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = path
        .iter()
        .fold(0x5EED_u64, |acc, &p| splitmix64(acc ^ splitmix64(p)));
    rng.set_stream(id);
    rng
}

/// Derives a child seed, for handing a unit its own seed (e.g. a CV fold
/// fitting a model that itself splits streams).
pub fn child_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ p))
}
