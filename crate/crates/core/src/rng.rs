//! Seeded random streams.
//!
//! Every stochastic operation takes an explicit RNG. Independent streams are
//! derived from one master seed with [`stream`]: the master seed keys a
//! ChaCha8 generator and the stream id selects its 64-bit stream counter, so
//! `stream(seed, i)` and `stream(seed, j)` never overlap for `i != j`.
//! Monte-Carlo runners use one stream per frame index, which keeps results
//! independent of the worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Independent stream `id` under `master_seed`.
pub fn stream(master_seed: u64, id: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(id);
    rng
}

/// Stream id for item `index` of a named sub-experiment. The tag occupies the
/// upper 16 bits so differently tagged families cannot collide.
pub fn tagged(tag: u16, index: u64) -> u64 {
    ((tag as u64) << 48) | (index & 0x0000_FFFF_FFFF_FFFF)
}
