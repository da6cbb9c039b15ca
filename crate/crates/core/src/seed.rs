//! Seed derivation for schedule-independent randomness.
//!
//! Every stochastic task (a tree, a CV fold, a grid cell) gets its own
//! generator seeded from `(master, task index)`, so results never depend on
//! which thread ran the task or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TaskRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for sub-task `index` of a task seeded with `master`.
pub fn derive(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub fn rng(seed: u64) -> TaskRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn task_rng(master: u64, index: u64) -> TaskRng {
    rng(derive(master, index))
}
