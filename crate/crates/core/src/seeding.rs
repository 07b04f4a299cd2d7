//! Deterministic seed derivation.
//!
//! Every random quantity in the crate is a pure function of a 64-bit seed.
//! Independent streams are split off a seed with [`derive`], which hashes the
//! parent seed together with a stream label using the SplitMix64 finalizer.
//! Matrix entries use [`entry_uniform`], a counter-based draw: the uniform for
//! entry `(i, j)` depends only on `(seed, i, j)`, never on generation order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output mixing function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for the stream `label` of `seed`.
pub fn derive(seed: u64, label: u64) -> u64 {
    mix64(mix64(seed.wrapping_add(GOLDEN_GAMMA)) ^ label.wrapping_mul(GOLDEN_GAMMA).wrapping_add(1))
}

/// Child seed for a sequence of labels, folded left to right.
pub fn derive_all(seed: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(seed, |acc, &l| derive(acc, l))
}

/// The `index`-th SplitMix64 output for `seed`, mapped to `[0, 1)` with 53 bits.
pub fn counter_uniform(seed: u64, index: u64) -> f64 {
    let z = mix64(
        mix64(seed)
            .wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
    );
    (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw for entry `(i, j)` of a `_ × cols` matrix.
pub fn entry_uniform(seed: u64, i: usize, j: usize, cols: usize) -> f64 {
    counter_uniform(seed, (i * cols + j) as u64)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream labels used across the crate.
pub mod stream {
    pub const MATRIX: u64 = 1;
    pub const STRAGGLERS: u64 = 2;
    pub const DECODE: u64 = 3;
    pub const PERMUTATION: u64 = 4;
    pub const CLUSTERING: u64 = 5;
    pub const PROBLEM: u64 = 6;
}
