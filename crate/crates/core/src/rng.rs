//! Deterministic per-work-item random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for work item `stream` of a run seeded with `seed`.
///
/// Streams are independent of evaluation order, so parallel and serial runs
/// draw identical numbers.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
