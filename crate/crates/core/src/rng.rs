//! Seeded random streams.
//!
//! One master seed per execution. Every consumer (the adversary, each
//! randomized station) draws from its own ChaCha stream selected by a
//! consumer id, so adding a consumer never shifts another consumer's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream id reserved for the adversary.
pub const ADVERSARY_STREAM: u64 = 0;

/// Stream id of station `id`.
pub fn station_stream(id: usize) -> u64 {
    id as u64 + 1
}

/// Independent stream for `consumer` under the master `seed`.
pub fn substream(seed: u64, consumer: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(consumer);
    rng
}
