//! Seed splitting.
//!
//! Every stochastic routine takes one master seed. Work items (sweep
//! points, repeats, bootstrap resamples) get their own generator seeded by
//!
//! ```text
//! child(master, path) = fold over path: s ← mix(s + φ·(k + 1))
//! ```
//!
//! where `mix` is the SplitMix64 finalizer and φ = 0x9E3779B97F4A7C15.
//! Children depend only on the master seed and their index path, so items
//! may be evaluated in any order or in parallel with identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the work item at `path` below `master`.
pub fn child_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(master), |s, &k| {
        mix(s.wrapping_add(GOLDEN.wrapping_mul(k.wrapping_add(1))))
    })
}

/// Generator for the work item at `path` below `master`.
pub fn child_rng(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(master, path))
}

/// Stream identifiers, so independent consumers of one master seed never
/// share a child.
pub mod stream {
    pub const TRACE: u64 = 1;
    pub const SWEEP: u64 = 2;
    pub const BOOTSTRAP: u64 = 3;
}
