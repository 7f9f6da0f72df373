use std::collections::HashSet;

use super::li::{li_from_normalizer, li_normalizer};
use super::pstable::StableSampler;
use crate::error::{check_index, param, Error, Result};
use crate::hashing::KWiseHash;
use crate::hashprg::BlockSource;

/// Bucketed geometric-mean estimator for the mass outside a heavy set.
///
/// Coordinate `i` is hashed to one of `s` buckets and contributes
/// `A_{i,j} v` to the bucket's three counters, where the stables `A_{i,j}`
/// come from blocks `3i`, `3i+1`, `3i+2` of the block source.
#[derive(Debug, Clone, PartialEq)]
pub struct LightEstimator<S> {
    dim: u64,
    sampler: StableSampler,
    theta: f64,
    bucket: KWiseHash,
    counters: Vec<[f64; 3]>,
    mantissa_bits: u32,
    source: S,
}

/// Bits of counter precision kept at finalization: `3 ceil(log2 d)`,
/// clamped to `24..=52`.
pub fn counter_precision(dim: u64) -> u32 {
    (3 * (dim.max(2) as f64).log2().ceil() as u32).clamp(24, 52)
}

/// Rounds `x` to `bits` significant bits.
pub fn round_significant(x: f64, bits: u32) -> f64 {
    if x == 0.0 || !x.is_finite() || bits >= 52 {
        return x;
    }
    let drop = 52 - bits;
    let raw = x.to_bits();
    let half = 1u64 << (drop - 1);
    let rounded = (raw + half) & !((1u64 << drop) - 1);
    f64::from_bits(rounded)
}

/// Independence of the bucket hash for heavy-set parameter `alpha`:
/// `min(ceil(2/alpha) + 2, 64)`.
pub fn bucket_independence(alpha: f64) -> usize {
    ((2.0 / alpha).ceil() as usize + 2).min(64)
}

impl<S: BlockSource> LightEstimator<S> {
    pub fn new(
        p: f64,
        dim: u64,
        buckets: u64,
        independence: usize,
        hash_seed: u64,
        source: S,
    ) -> Result<Self> {
        if !(p > 0.0 && p < 2.0) {
            return param(format!("p must lie in (0, 2), got {p}"));
        }
        if buckets == 0 || !buckets.is_power_of_two() {
            return param(format!("bucket count must be a power of two, got {buckets}"));
        }
        if source.block_bits() != 64 {
            return param("stables need 64-bit blocks");
        }
        if source.capacity() < dim.saturating_mul(3) {
            return param(format!("block source holds {} blocks, need 3d", source.capacity()));
        }
        Ok(Self {
            dim,
            sampler: StableSampler::new(p)?,
            theta: li_normalizer(p),
            bucket: KWiseHash::new(independence, dim, buckets, hash_seed)?,
            counters: vec![[0.0; 3]; buckets as usize],
            mantissa_bits: counter_precision(dim),
            source,
        })
    }

    pub fn buckets(&self) -> u64 {
        self.counters.len() as u64
    }

    pub fn counters(&self) -> &[[f64; 3]] {
        &self.counters
    }

    pub fn update(&mut self, i: u64, v: i64) -> Result<()> {
        check_index(i, self.dim)?;
        let cell = &mut self.counters[self.bucket.eval(i) as usize];
        let v = v as f64;
        for (j, c) in cell.iter_mut().enumerate() {
            *c += self.sampler.sample(self.source.fetch(3 * i + j as u64)) * v;
        }
        Ok(())
    }

    pub fn merge_from(&mut self, other: &Self) -> Result<()>
    where
        S: PartialEq,
    {
        if self.dim != other.dim
            || self.bucket != other.bucket
            || self.sampler != other.sampler
            || self.source != other.source
        {
            return Err(Error::Mismatch("light estimators built from different randomness".into()));
        }
        for (a, b) in self.counters.iter_mut().zip(&other.counters) {
            for j in 0..3 {
                a[j] += b[j];
            }
        }
        Ok(())
    }

    /// `s / (s - |h(L)|)` times the sum of bucket estimates outside `h(L)`.
    pub fn finalize(&self, heavy: &[u64]) -> Result<f64> {
        let s = self.counters.len();
        if s < 10 * heavy.len() {
            return Err(Error::Degenerate(format!(
                "{s} buckets cannot absorb {} heavy coordinates",
                heavy.len()
            )));
        }
        let mut taken = HashSet::new();
        for &l in heavy {
            check_index(l, self.dim)?;
            taken.insert(self.bucket.eval(l) as usize);
        }
        if taken.len() == s {
            return Err(Error::Degenerate("heavy coordinates cover every bucket".into()));
        }
        let p = self.sampler.p();
        let sum: f64 = self
            .counters
            .iter()
            .enumerate()
            .filter(|(b, _)| !taken.contains(b))
            .map(|(_, c)| {
                let dots = c.map(|x| round_significant(x, self.mantissa_bits));
                li_from_normalizer(dots, p, self.theta)
            })
            .sum();
        Ok(s as f64 / (s - taken.len()) as f64 * sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashprg::RandomBlocks;

    fn light(seed: u64) -> LightEstimator<RandomBlocks> {
        LightEstimator::new(1.0, 64, 16, 8, seed, RandomBlocks::new(64, 192, seed).unwrap()).unwrap()
    }

    #[test]
    fn rounding_keeps_requested_bits() {
        assert_eq!(round_significant(0.0, 24), 0.0);
        assert_eq!(round_significant(1.0 + 2f64.powi(-30), 24), 1.0);
        assert_eq!(round_significant(-3.0, 24), -3.0);
        let x = 1.234_567_890_123;
        assert!((round_significant(x, 24) / x - 1.0).abs() <= 2f64.powi(-24));
        assert_eq!(round_significant(x, 52), x);
        assert_eq!(counter_precision(256), 24);
        assert_eq!(counter_precision(1 << 16), 48);
        assert_eq!(bucket_independence(0.5), 6);
        assert_eq!(bucket_independence(0.001), 64);
    }

    #[test]
    fn zero_updates_leave_counters() {
        let mut l = light(1);
        l.update(3, 0).unwrap();
        assert!(l.counters().iter().all(|c| *c == [0.0; 3]));
        assert_eq!(l.finalize(&[]).unwrap(), 0.0);
    }

    #[test]
    fn linear_in_updates() {
        let mut a = light(2);
        let mut b = light(2);
        a.update(9, 1).unwrap();
        a.update(9, 1).unwrap();
        b.update(9, 2).unwrap();
        assert_eq!(a.counters(), b.counters());
        a.update(9, -2).unwrap();
        assert!(a.counters().iter().all(|c| *c == [0.0; 3]));
    }

    #[test]
    fn heavy_set_alone_in_buckets_gives_zero() {
        let mut l = light(3);
        l.update(5, 500).unwrap();
        assert_eq!(l.finalize(&[5]).unwrap(), 0.0);
        assert!(l.finalize(&[]).unwrap() > 0.0);
    }

    #[test]
    fn degenerate_heavy_sets() {
        let l = light(4);
        assert!(matches!(l.finalize(&[1, 2]), Err(Error::Degenerate(_))));
        let tiny = LightEstimator::new(1.0, 64, 1, 2, 0, RandomBlocks::new(64, 192, 0).unwrap()).unwrap();
        assert!(tiny.finalize(&[]).is_ok());
    }

    #[test]
    fn parameter_checks() {
        let src = RandomBlocks::new(64, 30, 0).unwrap();
        assert!(LightEstimator::new(1.0, 64, 16, 4, 0, &src).is_err());
        assert!(LightEstimator::new(2.0, 10, 16, 4, 0, &src).is_err());
        assert!(LightEstimator::new(1.0, 10, 12, 4, 0, &src).is_err());
        let narrow = RandomBlocks::new(32, 30, 0).unwrap();
        assert!(LightEstimator::new(1.0, 10, 16, 4, 0, &narrow).is_err());
        assert!(LightEstimator::new(1.0, 10, 16, 4, 0, &src).is_ok());
    }
}
