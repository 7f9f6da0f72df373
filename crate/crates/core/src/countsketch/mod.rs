//! CountSketch whose buckets and signs are read off generator blocks.
//!
//! Repetition `i`, coordinate `l` uses block `i*d + l`: the top bit of the
//! block is the sign, the low `log2 t` bits are the bucket.

mod private;

pub use private::PrivateCountSketch;

use crate::error::{check_index, param, Error, Result};
use crate::hashprg::{depth_for, pow2_floor, BlockSource, HashPrg};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountSketch<S> {
    dim: u64,
    width: usize,
    reps: usize,
    bound: i64,
    table: Vec<i64>,
    source: S,
}

/// Generator sized for a CountSketch: branching about `sqrt(r*d)` rounded
/// down to a power of two, depth just large enough to cover `r*d` blocks.
pub fn default_prg(block_bits: u32, dim: u64, reps: usize, seed: u64) -> Result<HashPrg> {
    let blocks = dim.saturating_mul(reps as u64).max(2);
    let b = pow2_floor((blocks as f64).sqrt());
    HashPrg::new(block_bits, b, depth_for(b, blocks), seed)
}

impl<S: BlockSource> CountSketch<S> {
    /// `t` buckets per row, `r` rows, coordinates in `[0, d)`, update
    /// magnitudes at most `bound`.
    pub fn new(source: S, dim: u64, width: usize, reps: usize, bound: i64) -> Result<Self> {
        if dim == 0 {
            return param("dimension must be positive");
        }
        if width == 0 || !width.is_power_of_two() {
            return param(format!("table width must be a power of two, got {width}"));
        }
        if reps % 2 == 0 {
            return param(format!("repetitions must be odd, got {reps}"));
        }
        if bound <= 0 {
            return param("update bound must be positive");
        }
        let n = source.block_bits();
        if width.trailing_zeros() >= n {
            return param(format!("{n}-bit blocks cannot hold a sign bit and {width} buckets"));
        }
        let needed = dim
            .checked_mul(reps as u64)
            .ok_or_else(|| Error::Param("r*d overflows".into()))?;
        if needed > source.capacity() {
            return param(format!(
                "generator has {} blocks but r*d = {needed}",
                source.capacity()
            ));
        }
        if dim.checked_mul(bound as u64).map_or(true, |v| v >= 1 << 63) {
            return param(format!("counters may overflow: d*M = {dim}*{bound} >= 2^63"));
        }
        Ok(Self {
            dim,
            width,
            reps,
            bound,
            table: vec![0; width * reps],
            source,
        })
    }

    pub fn dim(&self) -> u64 {
        self.dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn reps(&self) -> usize {
        self.reps
    }

    pub fn bound(&self) -> i64 {
        self.bound
    }

    pub fn source(&self) -> &S {
        &self.source
    }

    /// Row-major `r x t` counters.
    pub fn table(&self) -> &[i64] {
        &self.table
    }

    pub fn counter_count(&self) -> usize {
        self.table.len()
    }

    /// Bucket and sign of coordinate `l` in repetition `i`.
    pub fn decode(&self, i: usize, l: u64) -> Result<(usize, i64)> {
        check_index(i as u64, self.reps as u64)?;
        check_index(l, self.dim)?;
        Ok(self.decode_at(i, l))
    }

    #[inline]
    fn decode_at(&self, i: usize, l: u64) -> (usize, i64) {
        let block = self.source.fetch(i as u64 * self.dim + l);
        split_block(block, self.source.block_bits(), self.width)
    }

    pub fn update(&mut self, l: u64, v: i64) -> Result<()> {
        check_index(l, self.dim)?;
        if v.unsigned_abs() > self.bound as u64 {
            return Err(Error::Overflow {
                value: v,
                bound: self.bound,
            });
        }
        for i in 0..self.reps {
            let (bucket, sign) = self.decode_at(i, l);
            let cell = &mut self.table[i * self.width + bucket];
            *cell = cell.wrapping_add(sign * v);
        }
        Ok(())
    }

    /// Median over repetitions of the signed bucket value.
    pub fn estimate(&self, l: u64) -> Result<i64> {
        check_index(l, self.dim)?;
        let mut vals: Vec<i64> = (0..self.reps)
            .map(|i| {
                let (bucket, sign) = self.decode_at(i, l);
                sign * self.table[i * self.width + bucket]
            })
            .collect();
        let mid = vals.len() / 2;
        Ok(*vals.select_nth_unstable(mid).1)
    }

    fn check_compatible(&self, other: &Self) -> Result<()>
    where
        S: PartialEq,
    {
        if (self.dim, self.width, self.reps) != (other.dim, other.width, other.reps) {
            return Err(Error::Mismatch(format!(
                "(d, t, r) = ({}, {}, {}) vs ({}, {}, {})",
                self.dim, self.width, self.reps, other.dim, other.width, other.reps
            )));
        }
        if self.source != other.source {
            return Err(Error::Mismatch("sketches use different randomness".into()));
        }
        Ok(())
    }

    /// Adds `other`'s counters into this sketch.
    pub fn merge_from(&mut self, other: &Self) -> Result<()>
    where
        S: PartialEq,
    {
        self.check_compatible(other)?;
        for (a, b) in self.table.iter_mut().zip(&other.table) {
            *a = a.wrapping_add(*b);
        }
        Ok(())
    }

    /// Sketch of the sum of the two underlying vectors.
    pub fn merge(&self, other: &Self) -> Result<Self>
    where
        S: PartialEq + Clone,
    {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }
}

#[inline]
pub(crate) fn split_block(block: u64, block_bits: u32, width: usize) -> (usize, i64) {
    let sign = 1 - 2 * ((block >> (block_bits - 1)) & 1) as i64;
    (block as usize & (width - 1), sign)
}

/// `||tail_t(x)||_2 / sqrt(t)`: the l2 mass left after removing the `t`
/// largest-magnitude entries, scaled by `1/sqrt(t)`.
pub fn tail_delta(x: &[i64], t: usize) -> f64 {
    if t == 0 {
        return x.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
    }
    let mut mags: Vec<u64> = x.iter().map(|v| v.unsigned_abs()).collect();
    if t >= mags.len() {
        return 0.0;
    }
    mags.select_nth_unstable_by(t, |a, b| b.cmp(a));
    let tail: u128 = mags[t..].iter().map(|&m| u128::from(m) * u128::from(m)).sum();
    (tail as f64).sqrt() / (t as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashing::count_evaluations;
    use crate::hashprg::{LevelHash, RandomBlocks};

    fn sketch(seed: u64) -> CountSketch<HashPrg> {
        CountSketch::new(default_prg(32, 1000, 7, seed).unwrap(), 1000, 16, 7, 1 << 20).unwrap()
    }

    #[test]
    fn bit_layout() {
        assert_eq!(split_block(0, 32, 8), (0, 1));
        assert_eq!(split_block((1 << 31) | 0b1101, 32, 8), (5, -1));
        assert_eq!(split_block(u64::MAX, 64, 1), (0, -1));
    }

    #[test]
    fn decode_reads_the_indexed_block() {
        // both branches are the identity, so every block is the seed word
        let rows = vec![vec![LevelHash::Xor(0), LevelHash::Xor(0)]];
        let prg = HashPrg::from_parts(8, 0b1000_0101, rows).unwrap();
        let cs = CountSketch::new(prg, 1, 8, 1, 10).unwrap();
        assert_eq!(cs.decode(0, 0).unwrap(), (5, -1));
        assert_eq!(cs.decode(0, 0).unwrap(), cs.decode(0, 0).unwrap());
        assert!(cs.decode(1, 0).is_err());
    }

    #[test]
    fn configuration_checks() {
        let prg = default_prg(32, 100, 3, 1).unwrap();
        assert!(CountSketch::new(&prg, 100, 12, 3, 5).is_err());
        assert!(CountSketch::new(&prg, 100, 16, 4, 5).is_err());
        assert!(CountSketch::new(&prg, 100_000, 16, 3, 5).is_err());
        assert!(CountSketch::new(&prg, 100, 16, 3, i64::MAX / 50).is_err());
        assert!(CountSketch::new(&prg, 100, 1 << 32, 3, 5).is_err());
        assert!(CountSketch::new(&prg, 100, 16, 3, 5).is_ok());
    }

    #[test]
    fn update_cost_and_footprint() {
        let mut cs = sketch(3);
        let k = cs.source().depth() as u64;
        let (_, evals) = count_evaluations(|| cs.update(17, 7).unwrap());
        assert_eq!(evals, 7 * k);
        let touched: Vec<i64> = cs.table().iter().copied().filter(|&c| c != 0).collect();
        assert_eq!(touched.len(), 7);
        assert!(touched.iter().all(|&c| c.abs() == 7));
        assert!(matches!(cs.update(1, 1 << 21), Err(Error::Overflow { .. })));
    }

    #[test]
    fn single_nonzero_is_exact() {
        for seed in 0..20 {
            let mut cs = sketch(seed);
            cs.update(3, 7).unwrap();
            assert_eq!(cs.estimate(3).unwrap(), 7);
        }
        assert_eq!(sketch(0).estimate(999).unwrap(), 0);
    }

    #[test]
    fn inverse_update_restores() {
        let mut cs = sketch(4);
        cs.update(5, 9).unwrap();
        cs.update(80, -3).unwrap();
        cs.update(5, -9).unwrap();
        cs.update(80, 3).unwrap();
        assert!(cs.table().iter().all(|&c| c == 0));
    }

    #[test]
    fn merge_rules() {
        let mut a = sketch(5);
        let zero = sketch(5);
        a.update(10, 4).unwrap();
        assert_eq!(a.merge(&zero).unwrap(), a);
        let mut neg = sketch(5);
        neg.update(10, -4).unwrap();
        assert!(a.merge(&neg).unwrap().table().iter().all(|&c| c == 0));
        assert!(matches!(a.merge(&sketch(6)), Err(Error::Mismatch(_))));
    }

    #[test]
    fn relabel_consistency() {
        let prg = HashPrg::new(32, 4, 6, 8).unwrap();
        let shift = 37;
        let a = CountSketch::new(&prg, 1024, 64, 3, 10).unwrap();
        let q = prg.relabel(shift).unwrap();
        let b = CountSketch::new(&q, 1024, 64, 3, 10).unwrap();
        for i in 0..3 {
            for l in 0..1024 {
                assert_eq!(b.decode(i, l).unwrap(), a.decode(i, l ^ shift).unwrap());
            }
        }
    }

    #[test]
    fn works_on_random_blocks() {
        let src = RandomBlocks::new(64, 5 * 50, 1).unwrap();
        let mut cs = CountSketch::new(src, 50, 8, 5, 100).unwrap();
        cs.update(49, -12).unwrap();
        assert_eq!(cs.estimate(49).unwrap(), -12);
    }

    #[test]
    fn tail_delta_examples() {
        assert_eq!(tail_delta(&[5, -2, 0, 0], 2), 0.0);
        assert_eq!(tail_delta(&[3, 4, 0, 0], 1), 3.0);
        let x = [9, -1, 4, 2, -7, 3];
        let base = tail_delta(&x, 2);
        let scaled: Vec<i64> = x.iter().map(|v| -3 * v).collect();
        assert!((tail_delta(&scaled, 2) - 3.0 * base).abs() < 1e-12);
        // tail of {4, 3, 2, 1} is sqrt(30), t = 2
        assert!((base - (30f64).sqrt() / 2f64.sqrt()).abs() < 1e-12);
    }
}
