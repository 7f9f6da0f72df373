//! Constant-factor `F_p` estimation for `p > 2`.
//!
//! Coordinate `i` is scaled by `E_i^{1/p}`, where the discrete exponential
//! `E_i` is read off generator block `i`, and the scaled vector is hashed
//! into one wide CountSketch row. The largest bucket magnitude estimates
//! `||x||_p`; independent copies are combined by the median.

mod lp_sample;

pub use lp_sample::{lp_sample, LpSampler, LpSamplerConfig};

use crate::error::{check_index, param, Error, Result};
use crate::hashing::KWiseHash;
use crate::hashprg::{depth_for, pow2_floor, BlockSource, HashPrg};
use crate::seed::derive_seed;

/// A power of two `2^j` with `0 <= j <= cap`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscreteExponential {
    pub cap: u32,
    pub exponent: u32,
}

impl DiscreteExponential {
    pub fn value(&self) -> f64 {
        f64::from(self.exponent).exp2()
    }
}

/// Position of the first 1 among the leading `cap` bits of an `n`-bit block,
/// or `cap` when they are all zero.
pub fn discrete_exp(block: u64, block_bits: u32, cap: u32) -> Result<DiscreteExponential> {
    if cap > block_bits || block_bits > 64 || block_bits == 0 {
        return param(format!("cannot read {cap} leading bits from a {block_bits}-bit block"));
    }
    Ok(DiscreteExponential {
        cap,
        exponent: leading_exponent(block, block_bits, cap),
    })
}

#[inline]
fn leading_exponent(block: u64, block_bits: u32, cap: u32) -> u32 {
    let aligned = block << (64 - block_bits);
    aligned.leading_zeros().min(cap)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpHighConfig {
    pub p: f64,
    pub dim: u64,
    /// Upper bound on `|x_i|` at the end of the stream.
    pub bound: i64,
    pub copies: usize,
    pub seed: u64,
    /// Generator branching; defaults to the largest power of two `<= d^{1/4}`.
    pub branching: Option<u64>,
}

impl FpHighConfig {
    pub fn new(p: f64, dim: u64, bound: i64, seed: u64) -> Self {
        Self {
            p,
            dim,
            bound,
            copies: 5,
            seed,
            branching: None,
        }
    }

    /// Number of buckets per copy, `ceil(d^{1-2/p} log2 d)`.
    pub fn buckets(&self) -> u64 {
        let d = self.dim.max(2) as f64;
        (d.powf(1.0 - 2.0 / self.p) * d.log2()).ceil().max(1.0) as u64
    }

    /// Exponent cap `M = ceil(log2(d * bound))`, at most 64.
    pub fn cap(&self) -> u32 {
        let span = (self.dim as f64) * (self.bound.max(1) as f64);
        (span.log2().ceil().max(1.0) as u32).min(64)
    }

    fn independence(&self) -> usize {
        (self.dim.max(2) as f64).log2().ceil() as usize + 1
    }

    fn branching(&self) -> u64 {
        self.branching
            .unwrap_or_else(|| pow2_floor((self.dim as f64).powf(0.25)))
    }

    fn validate(&self) -> Result<()> {
        if !(self.p > 2.0) || !self.p.is_finite() {
            return param(format!("p must exceed 2, got {}", self.p));
        }
        if self.dim == 0 || self.bound <= 0 {
            return param("dimension and bound must be positive");
        }
        if self.copies == 0 {
            return param("at least one copy is required");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Replica {
    prg: HashPrg,
    bucket: KWiseHash,
    sign: KWiseHash,
    counters: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpHighSketch {
    config: FpHighConfig,
    cap: u32,
    /// `round(2^{j/p})` for `j = 0..=cap`.
    scale: Vec<i64>,
    copies: Vec<Replica>,
}

/// Generator used by copy `c` of a sketch with this configuration.
pub fn copy_prg(config: &FpHighConfig, copy: usize) -> Result<HashPrg> {
    let b = config.branching();
    HashPrg::new(64, b, depth_for(b, config.dim), derive_seed(config.seed, 3 * copy as u64))
}

impl FpHighSketch {
    pub fn new(config: FpHighConfig) -> Result<Self> {
        config.validate()?;
        let cap = config.cap();
        let scale = (0..=cap)
            .map(|j| (f64::from(j) / config.p).exp2().round() as i64)
            .collect();
        let buckets = config.buckets();
        let k = config.independence();
        let copies = (0..config.copies)
            .map(|c| {
                let base = 3 * c as u64;
                Ok(Replica {
                    prg: copy_prg(&config, c)?,
                    bucket: KWiseHash::new(k, config.dim, buckets, derive_seed(config.seed, base + 1))?,
                    sign: KWiseHash::new(k, config.dim, 2, derive_seed(config.seed, base + 2))?,
                    counters: vec![0; buckets as usize],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            cap,
            scale,
            copies,
        })
    }

    pub fn config(&self) -> &FpHighConfig {
        &self.config
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    /// Generator depth `k` of each copy.
    pub fn depth(&self) -> u32 {
        self.copies[0].prg.depth()
    }

    pub fn counter_count(&self) -> usize {
        self.copies.iter().map(|c| c.counters.len()).sum()
    }

    pub fn update(&mut self, i: u64, v: i64) -> Result<()> {
        check_index(i, self.config.dim)?;
        for c in &mut self.copies {
            let j = leading_exponent(c.prg.fetch(i), 64, self.cap);
            let delta = c.sign.sign(i) * self.scale[j as usize] * v;
            let cell = &mut c.counters[c.bucket.eval(i) as usize];
            *cell = cell.wrapping_add(delta);
        }
        Ok(())
    }

    /// Median over copies of the largest bucket magnitude.
    pub fn estimate(&self) -> f64 {
        let mut maxima: Vec<f64> = self
            .copies
            .iter()
            .map(|c| c.counters.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) as f64)
            .collect();
        median(&mut maxima)
    }

    pub fn merge_from(&mut self, other: &Self) -> Result<()> {
        if self.config != other.config {
            return Err(Error::Mismatch("fp-high sketches configured differently".into()));
        }
        for (a, b) in self.copies.iter_mut().zip(&other.copies) {
            for (x, y) in a.counters.iter_mut().zip(&b.counters) {
                *x = x.wrapping_add(*y);
            }
        }
        Ok(())
    }

    /// Counters of every copy, copy after copy.
    pub fn counters(&self) -> Vec<i64> {
        self.copies.iter().flat_map(|c| c.counters.iter().copied()).collect()
    }
}

pub(crate) fn median(vals: &mut [f64]) -> f64 {
    if vals.is_empty() {
        return 0.0;
    }
    vals.sort_by(f64::total_cmp);
    let n = vals.len();
    if n % 2 == 1 {
        vals[n / 2]
    } else {
        0.5 * (vals[n / 2 - 1] + vals[n / 2])
    }
}

/// Statistics of the scaled vector `z_i = x_i E_i^{1/p}` for a dense `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZReport {
    pub norm_p: f64,
    pub max_scaled: f64,
    /// `|{i : |x_i| E_i^{1/p} >= ||x||_p / T^{1/p}}|`
    pub large_count: usize,
    pub large_threshold_t: f64,
    /// `sum_i round(E_i^{1/p})^2 x_i^2`
    pub rounded_energy: f64,
    /// `d^{1-2/p} ||x||_p^2`
    pub energy_scale: f64,
}

impl ZReport {
    /// `||x||_p / 16^{1/p} <= max <= 50^{1/p} ||x||_p`.
    pub fn max_in_window(&self, p: f64) -> bool {
        self.max_scaled >= self.norm_p / 16f64.powf(1.0 / p)
            && self.max_scaled <= 50f64.powf(1.0 / p) * self.norm_p
    }

    /// At most `20 T` large coordinates.
    pub fn count_in_range(&self) -> bool {
        self.large_count as f64 <= 20.0 * self.large_threshold_t
    }

    /// Rounded energy within `20x` its expectation bound
    /// `4 (1/(2 - 2^{2/p}) + 1) d^{1-2/p} ||x||_p^2`.
    pub fn energy_in_range(&self, p: f64) -> bool {
        let expect = 4.0 * (1.0 / (2.0 - 2f64.powf(2.0 / p)) + 1.0) * self.energy_scale;
        self.rounded_energy <= 20.0 * expect
    }
}

/// Computes the three statistics that the estimator's analysis needs from the
/// scaled vector, using blocks `0..d` of `source` for the exponentials.
pub fn zvector_properties_check<S: BlockSource>(
    x: &[i64],
    source: &S,
    p: f64,
    cap: u32,
    large_threshold_t: f64,
) -> Result<ZReport> {
    if (source.capacity() as usize) < x.len() {
        return param("block source shorter than the vector");
    }
    let n = source.block_bits();
    if cap > n {
        return param(format!("cap {cap} exceeds block size {n}"));
    }
    let norm_p = x.iter().map(|&v| (v.unsigned_abs() as f64).powf(p)).sum::<f64>().powf(1.0 / p);
    let cut = norm_p / large_threshold_t.powf(1.0 / p);
    let mut max_scaled = 0.0f64;
    let mut large_count = 0;
    let mut rounded_energy = 0.0;
    for (i, &v) in x.iter().enumerate() {
        if v == 0 {
            continue;
        }
        let j = leading_exponent(source.fetch(i as u64), n, cap);
        let root = (f64::from(j) / p).exp2();
        let z = v.unsigned_abs() as f64 * root;
        max_scaled = max_scaled.max(z);
        if z >= cut {
            large_count += 1;
        }
        rounded_energy += root.round().powi(2) * (v as f64).powi(2);
    }
    let d = x.len().max(1) as f64;
    Ok(ZReport {
        norm_p,
        max_scaled,
        large_count,
        large_threshold_t,
        rounded_energy,
        energy_scale: d.powf(1.0 - 2.0 / p) * norm_p * norm_p,
    })
}
