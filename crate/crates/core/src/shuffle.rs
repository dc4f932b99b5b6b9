//! Seeded shuffling shared by the split, exemplar selection and baseline
//! training.
//!
//! All randomness goes through ChaCha8 seeded with `seed_from_u64`, and the
//! Fisher-Yates shuffle below draws indices by rejection sampling on raw
//! `u64` outputs. Neither depends on `rand`'s distribution code, so a given
//! seed produces the same permutation on every platform and release.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform integer in `0..bound`. `bound` must be nonzero.
pub(crate) fn below(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    let zone = u64::MAX - (u64::MAX % bound);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return v % bound;
        }
    }
}

pub(crate) fn shuffle<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = below(rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}
