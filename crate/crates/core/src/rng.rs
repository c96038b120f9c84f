//! Per-realization random streams.
//!
//! Every disorder realization draws from its own ChaCha8 stream: the key is
//! expanded from the master seed (PCG32 expansion of `seed_from_u64`) and the
//! 64-bit stream id is the realization index. A realization therefore depends
//! only on `(master_seed, realization_index)`, never on scheduling order, and
//! the generator is portable bit-for-bit across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn realization_rng(master_seed: u64, realization_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(realization_index);
    rng
}

/// Auxiliary stream for analysis-side resampling (bootstrap etc.), kept
/// disjoint from the realization streams by flipping the key.
pub fn auxiliary_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(stream);
    rng
}
