//! Seeded, counter-addressed random streams.
//!
//! Every independent unit of work (a block of particles, a protocol round,
//! a repetition) draws from its own ChaCha stream selected by index, so
//! results do not depend on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Particles per random stream when sampling ensembles.
pub const BLOCK: usize = 4096;

/// The generator for `(seed, stream)`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Derives a sub-seed for a named purpose, so that components sharing a
/// user seed do not share streams.
pub fn derive(seed: u64, purpose: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
