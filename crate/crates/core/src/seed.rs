//! Seed expansion and per-trial seed derivation.
//!
//! Every random object in the crate is a pure function of a 64-bit master
//! seed. Expansion into longer streams goes through ChaCha8 in counter mode;
//! deriving independent child seeds goes through the SplitMix64 finalizer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed number `index` of `master`.
///
/// Distinct indices give (empirically) independent seeds, and the mapping is
/// stable across runs so a single trial can be replayed in isolation.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master ^ GOLDEN_GAMMA).wrapping_add(index.wrapping_mul(GOLDEN_GAMMA)))
}

/// Deterministic counter-mode stream for `seed`.
pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn derive_is_stable_and_spread() {
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
        assert_ne!(derive_seed(7, 3), derive_seed(7, 4));
        assert_ne!(derive_seed(7, 3), derive_seed(8, 3));
        let ones: u32 = (0..1000).map(|i| derive_seed(0, i).count_ones()).sum();
        let mean = ones as f64 / 1000.0;
        assert!((mean - 32.0).abs() < 1.0, "mean popcount {mean}");
    }

    #[test]
    fn stream_reproducible() {
        let a: Vec<u64> = (0..4).map({
            let mut r = stream(11);
            move |_| r.next_u64()
        }).collect();
        let mut r = stream(11);
        let b: Vec<u64> = (0..4).map(|_| r.next_u64()).collect();
        assert_eq!(a, b);
    }
}
