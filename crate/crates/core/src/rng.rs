//! Seed derivation shared by every stochastic routine.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed for the `index`-th cell of a grid run from a base seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    base ^ index
}

/// Independent stream `stream` of the generator seeded by `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
