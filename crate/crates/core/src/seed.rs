//! Seed derivation.
//!
//! Every stochastic step receives a seed derived from the master seed and
//! the coordinates of the work item (dataset, repeat, fold, learner, ...),
//! so results do not depend on the order in which parallel work is run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One step of the splitmix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and a path of coordinates.
///
/// `derive(s, &[a, b])` folds each coordinate through splitmix64 in turn:
/// `h0 = splitmix64(s)`, `h(i+1) = splitmix64(h(i) ^ splitmix64(coord(i)))`.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |h, &c| splitmix64(h ^ splitmix64(c)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
