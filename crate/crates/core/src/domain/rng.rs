//! Seeded random streams.
//!
//! Every consumer of randomness (dataset sampling, an oracle session, an
//! analyst, a Monte Carlo trial) draws from its own ChaCha8 stream identified
//! by `(master seed, stream id)`. Streams with distinct ids are independent,
//! so trials can run in any order or in parallel and still reproduce.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn stream_rng(master_seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Draws a child seed from `rng`; used to hand independent seeds to the
/// components of a single trial.
pub fn child_seed(rng: &mut SimRng) -> u64 {
    rng.next_u64()
}

/// SplitMix64 finalizer. Used for stateless pseudo-random query tables.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Maps a 64-bit word to `[0, 1)` using its top 53 bits.
#[inline]
pub fn unit_f64(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
