//! `(1 +- eps)` estimation of `F_p = ||x||_p^p` for `0 < p < 2`.
//!
//! Heavy coordinates are found with a CountSketch and counted from their
//! point estimates; the rest of the mass is estimated by bucketed
//! geometric-mean estimators whose stables come from a tree generator.

mod heavy;
mod li;
mod light;
mod pstable;

pub use heavy::{heavy_hitters, heavy_width, HeavyEntry, HeavyHitterReport, HeavyHitters, NormEstimator};
pub use li::{li_estimate, li_normalizer};
pub use light::{bucket_independence, counter_precision, round_significant, LightEstimator};
pub use pstable::{pstable_sample, StableSampler};

use crate::error::{check_index, param, Error, Result};
use crate::hashprg::{depth_for, pow2_floor, HashPrg};
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpLowConfig {
    pub p: f64,
    pub dim: u64,
    pub eps: f64,
    /// Upper bound on a single update's magnitude.
    pub bound: i64,
    pub seed: u64,
    /// Number of light estimators averaged; defaults to `2 ceil(log2(1/eps)) + 1`.
    pub light_copies: Option<usize>,
}

impl FpLowConfig {
    pub fn new(p: f64, dim: u64, eps: f64, bound: i64, seed: u64) -> Self {
        Self {
            p,
            dim,
            eps,
            bound,
            seed,
            light_copies: None,
        }
    }

    /// `min(eps^2 log2 d, 1/4)`.
    pub fn alpha(&self) -> f64 {
        (self.eps * self.eps * (self.dim.max(2) as f64).log2()).min(0.25)
    }

    /// `(alpha/2)^{1/p}`.
    pub fn phi(&self) -> f64 {
        (self.alpha() / 2.0).powf(1.0 / self.p)
    }

    /// Light buckets: `ceil(20/alpha)` rounded up to a power of two, at least 64.
    pub fn buckets(&self) -> u64 {
        ((20.0 / self.alpha()).ceil() as u64).max(64).next_power_of_two()
    }

    pub fn copies(&self) -> usize {
        self.light_copies
            .unwrap_or_else(|| 2 * (1.0 / self.eps).log2().ceil().max(0.0) as usize + 1)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 2.0) {
            return param(format!("p must lie in (0, 2), got {}", self.p));
        }
        if !(self.eps > 0.0 && self.eps <= 0.25) {
            return param(format!("eps must lie in (0, 1/4], got {}", self.eps));
        }
        if self.dim == 0 || self.bound <= 0 {
            return param("dimension and bound must be positive");
        }
        if self.copies() == 0 {
            return param("at least one light estimator is required");
        }
        Ok(())
    }
}

/// Generator feeding light estimator `c`: 64-bit blocks, branching about
/// `(3d)^{1/4}`.
pub fn light_prg(config: &FpLowConfig, copy: usize) -> Result<HashPrg> {
    let blocks = (3 * config.dim).max(2);
    let b = pow2_floor((blocks as f64).powf(0.25));
    HashPrg::new(64, b, depth_for(b, blocks), derive_seed(config.seed, 2 * copy as u64 + 2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpLowSketch {
    config: FpLowConfig,
    heavy: HeavyHitters,
    light: Vec<LightEstimator<HashPrg>>,
}

impl FpLowSketch {
    pub fn new(config: FpLowConfig) -> Result<Self> {
        config.validate()?;
        let heavy = HeavyHitters::new(config.p, config.dim, config.phi(), config.bound, derive_seed(config.seed, 0))?;
        let k = bucket_independence(config.alpha());
        let light = (0..config.copies())
            .map(|c| {
                LightEstimator::new(
                    config.p,
                    config.dim,
                    config.buckets(),
                    k,
                    derive_seed(config.seed, 2 * c as u64 + 1),
                    light_prg(&config, c)?,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            heavy,
            light,
        })
    }

    pub fn config(&self) -> &FpLowConfig {
        &self.config
    }

    pub fn heavy(&self) -> &HeavyHitters {
        &self.heavy
    }

    pub fn light(&self) -> &[LightEstimator<HashPrg>] {
        &self.light
    }

    pub fn update(&mut self, i: u64, v: i64) -> Result<()> {
        check_index(i, self.config.dim)?;
        self.heavy.update(i, v)?;
        for l in &mut self.light {
            l.update(i, v)?;
        }
        Ok(())
    }

    pub fn merge_from(&mut self, other: &Self) -> Result<()> {
        if self.config != other.config {
            return Err(Error::Mismatch("fp-low sketches configured differently".into()));
        }
        self.heavy.merge_from(&other.heavy)?;
        for (a, b) in self.light.iter_mut().zip(&other.light) {
            a.merge_from(b)?;
        }
        Ok(())
    }

    /// Heavy part `sum |x^_l|^p` plus the mean light estimate.
    pub fn estimate(&self) -> Result<f64> {
        let report = self.heavy.report()?;
        let p = self.config.p;
        let heavy: f64 = report.entries.iter().map(|e| (e.estimate.unsigned_abs() as f64).powf(p)).sum();
        let indices = report.indices();
        let mut light = 0.0;
        for l in &self.light {
            light += l.finalize(&indices)?;
        }
        Ok(heavy + light / self.light.len() as f64)
    }
}

/// One-shot estimate of `||x||_p^p` over a list of updates.
pub fn fp_low_estimate(updates: &[(u64, i64)], dim: u64, p: f64, eps: f64, bound: i64, seed: u64) -> Result<f64> {
    let mut sk = FpLowSketch::new(FpLowConfig::new(p, dim, eps, bound, seed))?;
    for &(i, v) in updates {
        sk.update(i, v)?;
    }
    sk.estimate()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_parameters() {
        let c = FpLowConfig::new(1.0, 10_000, 0.1, 1000, 0);
        assert!((c.alpha() - 0.01 * 10_000f64.log2()).abs() < 1e-12);
        assert!((c.phi() - c.alpha() / 2.0).abs() < 1e-12);
        assert_eq!(c.buckets(), 256);
        assert_eq!(c.copies(), 9);
        let big = FpLowConfig::new(0.5, 1 << 20, 0.25, 10, 0);
        assert_eq!(big.alpha(), 0.25);
        assert_eq!(big.buckets(), 128);
        assert!(FpLowSketch::new(FpLowConfig::new(1.0, 10, 0.3, 10, 0)).is_err());
        assert!(FpLowSketch::new(FpLowConfig::new(2.0, 10, 0.1, 10, 0)).is_err());
    }

    #[test]
    fn zero_stream_is_zero() {
        assert_eq!(fp_low_estimate(&[], 200, 1.0, 0.2, 10, 1).unwrap(), 0.0);
    }

    #[test]
    fn single_spike() {
        let mut good = 0;
        for seed in 0..20 {
            let est = fp_low_estimate(&[(33, -250)], 500, 1.0, 0.2, 1000, seed).unwrap();
            if (est - 250.0).abs() <= 0.4 * 250.0 {
                good += 1;
            }
        }
        assert!(good >= 14, "{good}");
    }
}
