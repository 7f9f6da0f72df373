use super::li::{li_from_normalizer, li_normalizer};
use super::pstable::StableSampler;
use crate::countsketch::CountSketch;
use crate::error::{check_index, param, Error, Result};
use crate::fp_high::median;
use crate::hashprg::{depth_for, pow2_floor, HashPrg};

/// Constant-accuracy `||x||_p` proxy: `groups` medians of means of
/// `per_group` single-bucket geometric-mean estimators.
///
/// Coordinate `i` reads its `3 * groups * per_group` stables from a
/// contiguous run of generator blocks starting at `i * width`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormEstimator {
    dim: u64,
    groups: usize,
    per_group: usize,
    sampler: StableSampler,
    theta: f64,
    prg: HashPrg,
    dots: Vec<[f64; 3]>,
}

impl NormEstimator {
    pub fn new(p: f64, dim: u64, groups: usize, per_group: usize, seed: u64) -> Result<Self> {
        if !(p > 0.0 && p < 2.0) {
            return param(format!("p must lie in (0, 2), got {p}"));
        }
        if dim == 0 || groups == 0 || per_group == 0 {
            return param("dimension and estimator counts must be positive");
        }
        let blocks = dim
            .checked_mul(3 * (groups * per_group) as u64)
            .ok_or_else(|| Error::Param("too many stables".into()))?
            .max(2);
        let b = pow2_floor((blocks as f64).powf(0.25));
        Ok(Self {
            dim,
            groups,
            per_group,
            sampler: StableSampler::new(p)?,
            theta: li_normalizer(p),
            prg: HashPrg::new(64, b, depth_for(b, blocks), seed)?,
            dots: vec![[0.0; 3]; groups * per_group],
        })
    }

    /// Default shape: 5 groups of 40.
    pub fn with_defaults(p: f64, dim: u64, seed: u64) -> Result<Self> {
        Self::new(p, dim, 5, 40, seed)
    }

    fn width(&self) -> u64 {
        3 * self.dots.len() as u64
    }

    pub fn update(&mut self, i: u64, v: i64) -> Result<()> {
        check_index(i, self.dim)?;
        let v = v as f64;
        let blocks = self.prg.stream_view(i * self.width(), self.width())?;
        for (n, block) in blocks.enumerate() {
            self.dots[n / 3][n % 3] += self.sampler.sample(block) * v;
        }
        Ok(())
    }

    pub fn merge_from(&mut self, other: &Self) -> Result<()> {
        if (self.dim, self.groups, self.per_group) != (other.dim, other.groups, other.per_group)
            || self.sampler != other.sampler
            || self.prg != other.prg
        {
            return Err(Error::Mismatch("norm estimators built from different randomness".into()));
        }
        for (a, b) in self.dots.iter_mut().zip(&other.dots) {
            for j in 0..3 {
                a[j] += b[j];
            }
        }
        Ok(())
    }

    /// Estimate of `||x||_p^p`.
    pub fn estimate_pth_power(&self) -> f64 {
        let p = self.sampler.p();
        let mut means: Vec<f64> = self
            .dots
            .chunks(self.per_group)
            .map(|g| {
                g.iter().map(|&d| li_from_normalizer(d, p, self.theta)).sum::<f64>()
                    / self.per_group as f64
            })
            .collect();
        median(&mut means)
    }

    /// Estimate of `||x||_p`.
    pub fn estimate(&self) -> f64 {
        self.estimate_pth_power().powf(1.0 / self.sampler.p())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeavyEntry {
    pub index: u64,
    pub estimate: i64,
    pub sign: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeavyHitterReport {
    pub phi: f64,
    /// The `||x||_p` proxy the threshold was scaled by.
    pub norm: f64,
    pub entries: Vec<HeavyEntry>,
}

impl HeavyHitterReport {
    pub fn indices(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.index).collect()
    }
}

/// CountSketch plus norm proxy; reports coordinates with
/// `|x^_i| >= 0.8 phi v`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeavyHitters {
    phi: f64,
    sketch: CountSketch<HashPrg>,
    norm: NormEstimator,
}

/// CountSketch width for threshold `phi`: `(phi/10)^{-p}` rounded up to a
/// power of two.
pub fn heavy_width(p: f64, phi: f64) -> usize {
    ((phi / 10.0).powf(-p).ceil() as usize).next_power_of_two()
}

impl HeavyHitters {
    pub fn new(p: f64, dim: u64, phi: f64, bound: i64, seed: u64) -> Result<Self> {
        if !(phi > 0.0 && phi < 1.0) {
            return param(format!("phi must lie in (0, 1), got {phi}"));
        }
        let reps = 2 * (dim.max(2) as f64).log2().ceil() as usize + 1;
        let prg = crate::countsketch::default_prg(64, dim, reps, crate::seed::derive_seed(seed, 0))?;
        Ok(Self {
            phi,
            sketch: CountSketch::new(prg, dim, heavy_width(p, phi), reps, bound)?,
            norm: NormEstimator::with_defaults(p, dim, crate::seed::derive_seed(seed, 1))?,
        })
    }

    pub fn sketch(&self) -> &CountSketch<HashPrg> {
        &self.sketch
    }

    pub fn norm_estimator(&self) -> &NormEstimator {
        &self.norm
    }

    pub fn counter_count(&self) -> usize {
        self.sketch.counter_count() + 3 * self.norm.dots.len()
    }

    pub fn update(&mut self, i: u64, v: i64) -> Result<()> {
        self.sketch.update(i, v)?;
        self.norm.update(i, v)
    }

    pub fn merge_from(&mut self, other: &Self) -> Result<()> {
        if self.phi != other.phi {
            return Err(Error::Mismatch("different heavy thresholds".into()));
        }
        self.sketch.merge_from(&other.sketch)?;
        self.norm.merge_from(&other.norm)
    }

    /// Scans every coordinate of `[d]`.
    pub fn report(&self) -> Result<HeavyHitterReport> {
        let norm = self.norm.estimate();
        let cut = 0.8 * self.phi * norm;
        let mut entries = Vec::new();
        for i in 0..self.sketch.dim() {
            let est = self.sketch.estimate(i)?;
            if est != 0 && est.unsigned_abs() as f64 >= cut {
                entries.push(HeavyEntry {
                    index: i,
                    estimate: est,
                    sign: est.signum(),
                });
            }
        }
        Ok(HeavyHitterReport {
            phi: self.phi,
            norm,
            entries,
        })
    }
}

/// One-shot heavy hitters over a list of updates.
pub fn heavy_hitters(
    updates: &[(u64, i64)],
    dim: u64,
    p: f64,
    phi: f64,
    bound: i64,
    seed: u64,
) -> Result<HeavyHitterReport> {
    let mut hh = HeavyHitters::new(p, dim, phi, bound, seed)?;
    for &(i, v) in updates {
        hh.update(i, v)?;
    }
    hh.report()
}
