//! Deterministic seed splitting.
//!
//! Every run has one root seed. Subsystems (parameter init, action sampling,
//! simulator noise, shuffling) each get an independent stream derived from
//! the root and a fixed label, so a single integer reproduces a run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xxhash_rust::xxh64::xxh64;

pub const INIT: &str = "init";
pub const SAMPLING: &str = "sampling";
pub const SIM_NOISE: &str = "sim-noise";
pub const SIM_TABLE: &str = "sim-table";
pub const SHUFFLE: &str = "shuffle";
pub const PROBE: &str = "probe";

/// Derive a child seed from `root` for the subsystem named `label`.
pub fn derive(root: u64, label: &str) -> u64 {
    xxh64(label.as_bytes(), root)
}

/// Platform-independent RNG for the subsystem named `label`.
pub fn rng(root: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(root, label))
}
