//! Seed plumbing.
//!
//! Everything random in this crate flows from one `u64` seed through
//! [`child_seed`]: each independent unit of work (a trial, a Monte Carlo
//! batch) derives its own stream up front from `(seed, namespace, index)`,
//! and aggregates are folded in index order. Work can then be scheduled on
//! any number of threads without changing a single output bit.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream namespaces. Distinct call sites use distinct namespaces so that
/// e.g. trial #5 of an experiment and batch #5 of a quadrature run never
/// share a generator.
pub const STREAM_TRIAL: u64 = 1;
pub const STREAM_BATCH: u64 = 2;
pub const STREAM_SPACINGS: u64 = 3;
pub const STREAM_EMPIRICAL: u64 = 4;
pub const STREAM_SWEEP: u64 = 5;
pub const STREAM_ORACLE: u64 = 6;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 finalizer; bijective on u64.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the seed for stream `index` of `namespace` under a master seed:
/// `mix(mix(seed + GOLDEN*namespace) + GOLDEN*index)`. Two finalizer rounds
/// over distinct affine offsets; collisions across (namespace, index) pairs
/// would require a collision of the mixed chain and are not a practical
/// concern.
pub fn child_seed(seed: u64, namespace: u64, index: u64) -> u64 {
    mix(mix(seed.wrapping_add(GOLDEN.wrapping_mul(namespace))).wrapping_add(GOLDEN.wrapping_mul(index)))
}

/// The single RNG used throughout: ChaCha8 keyed from a u64.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform f64 in [0,1) from the top 53 bits of one u64 draw. Pinned here
/// so the sample stream does not depend on any library's float convention.
pub fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform index in [0, bound) by 128-bit widening multiply. The bias is
/// bound/2^64, far below anything observable; in exchange the draw is one
/// multiply, branch-free, and version-proof.
pub fn index_below(rng: &mut ChaCha8Rng, bound: u32) -> u32 {
    debug_assert!(bound > 0);
    (((rng.next_u64() as u128) * (bound as u128)) >> 64) as u32
}
