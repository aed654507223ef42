//! Seeded random streams.
//!
//! All randomness is drawn from ChaCha8 (`rand_chacha`), seeded with a
//! 64-bit master seed and split into independent streams by ChaCha's
//! stream counter. The algorithm name is written into every persisted
//! artifact so instances can be regenerated elsewhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Name recorded in benchmark and checkpoint files.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Stream used by the benchmark generator.
pub const STREAM_BENCHMARK: u64 = 0;
/// Stream shared by all transfer events in one multi-task run.
pub const STREAM_TRANSFER: u64 = 1 << 40;
/// Stream used by the KTM search loop.
pub const STREAM_SEARCH: u64 = 1 << 41;
/// Stream used by the template generator backend.
pub const STREAM_GENERATOR: u64 = 1 << 42;

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Per-task GA stream; each task owns one so task loops can run in any order.
pub fn ga_stream(seed: u64, task: usize) -> Rng {
    stream(seed, 1 + task as u64)
}
