//! Seed derivation for reproducible parallel work.
//!
//! Every task owns a ChaCha8 generator keyed by the master seed and selected by
//! a task-specific stream number, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TaskRng = ChaCha8Rng;

/// Generator for task `stream` under `seed`.
pub fn task_rng(seed: u64, stream: u64) -> TaskRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream number for a two-level task index such as (grid point, replicate).
pub fn stream2(outer: u64, inner: u64) -> u64 {
    debug_assert!(outer < 1 << 32 && inner < 1 << 32);
    outer << 32 | inner
}
