use crate::error::{check_index, param, Error, Result};
use crate::hashing::KWiseHash;
use crate::hashprg::{depth_for, pow2_floor, BlockSource, HashPrg};
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpSamplerConfig {
    pub p: f64,
    pub dim: u64,
    pub eps: f64,
    /// Independent CountSketch rows that must agree on the sampled index.
    pub copies: usize,
    pub seed: u64,
}

impl LpSamplerConfig {
    pub fn new(p: f64, dim: u64, eps: f64, seed: u64) -> Self {
        Self {
            p,
            dim,
            eps,
            copies: 3,
            seed,
        }
    }

    /// Buckets per row: `d^{1-2/p} log2(d)^2 / eps^2`, rounded up to a power
    /// of two and capped at `2^22`.
    pub fn width(&self) -> u64 {
        let d = self.dim.max(2) as f64;
        let w = d.powf(1.0 - 2.0 / self.p) * d.log2().powi(2) / (self.eps * self.eps);
        (w.ceil() as u64).next_power_of_two().min(1 << 22)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Row {
    bucket: KWiseHash,
    sign: KWiseHash,
    counters: Vec<f64>,
}

/// Relaxed `l_p` sampler for `p > 2`: coordinates are scaled by
/// `Exp_i^{-1/p}` with the exponential read off generator block `i`, then
/// sketched into a few independent single-row CountSketches. The sample is
/// the unique index that lands in the heaviest bucket of every row with a
/// consistent sign.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSampler {
    config: LpSamplerConfig,
    prg: HashPrg,
    rows: Vec<Row>,
}

/// `Exp^{-1/p}` from the top 52 bits of a block, via the exponential
/// quantile `-ln U` with `U` uniform on the open unit interval.
#[inline]
pub(crate) fn inverse_exp_root(block: u64, p: f64) -> f64 {
    let u = ((block >> 12) as f64 + 0.5) * (-52f64).exp2();
    (-u.ln()).powf(-1.0 / p)
}

impl LpSampler {
    pub fn new(config: LpSamplerConfig) -> Result<Self> {
        if !(config.p > 2.0) || !config.p.is_finite() {
            return param(format!("p must exceed 2, got {}", config.p));
        }
        if !(config.eps > 0.0 && config.eps < 1.0) {
            return param(format!("eps must lie in (0, 1), got {}", config.eps));
        }
        if config.dim == 0 || config.copies == 0 {
            return param("dimension and copies must be positive");
        }
        let b = pow2_floor((config.dim as f64).powf(0.25));
        let prg = HashPrg::new(64, b, depth_for(b, config.dim), derive_seed(config.seed, 0))?;
        let width = config.width();
        let k = (config.dim.max(2) as f64).log2().ceil() as usize + 1;
        let rows = (0..config.copies as u64)
            .map(|c| {
                Ok(Row {
                    bucket: KWiseHash::new(k, config.dim, width, derive_seed(config.seed, 2 * c + 1))?,
                    sign: KWiseHash::new(k, config.dim, 2, derive_seed(config.seed, 2 * c + 2))?,
                    counters: vec![0.0; width as usize],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { config, prg, rows })
    }

    pub fn config(&self) -> &LpSamplerConfig {
        &self.config
    }

    pub fn update(&mut self, i: u64, v: i64) -> Result<()> {
        check_index(i, self.config.dim)?;
        let w = v as f64 * inverse_exp_root(self.prg.fetch(i), self.config.p);
        for row in &mut self.rows {
            let b = row.bucket.eval(i) as usize;
            row.counters[b] += row.sign.sign(i) as f64 * w;
        }
        Ok(())
    }

    pub fn merge_from(&mut self, other: &Self) -> Result<()> {
        if self.config != other.config {
            return Err(Error::Mismatch("samplers configured differently".into()));
        }
        for (a, b) in self.rows.iter_mut().zip(&other.rows) {
            for (x, y) in a.counters.iter_mut().zip(&b.counters) {
                *x += y;
            }
        }
        Ok(())
    }

    pub fn counters(&self) -> Vec<f64> {
        self.rows.iter().flat_map(|r| r.counters.iter().copied()).collect()
    }

    /// Scans `[0, d)` for the index matching the heaviest bucket of every row.
    pub fn sample(&self) -> Result<u64> {
        let heaviest: Vec<(usize, f64)> = self
            .rows
            .iter()
            .map(|r| {
                r.counters
                    .iter()
                    .enumerate()
                    .fold((0, 0.0f64), |best, (b, &c)| if c.abs() > best.1.abs() { (b, c) } else { best })
            })
            .collect();
        if heaviest.iter().any(|&(_, c)| c == 0.0) {
            return Err(Error::SamplerFailure("sketch is empty".into()));
        }
        let mut found = None;
        for i in 0..self.config.dim {
            let mut orientation = 0;
            let matches = self.rows.iter().zip(&heaviest).all(|(r, &(b, c))| {
                if r.bucket.eval(i) as usize != b {
                    return false;
                }
                let s = r.sign.sign(i) * if c > 0.0 { 1 } else { -1 };
                if orientation == 0 {
                    orientation = s;
                }
                s == orientation
            });
            if matches {
                if found.is_some() {
                    return Err(Error::SamplerFailure("several indices match every row".into()));
                }
                found = Some(i);
            }
        }
        found.ok_or_else(|| Error::SamplerFailure("no index matches every row".into()))
    }
}

/// Runs a fresh sampler over `updates` and returns its sample.
pub fn lp_sample(
    updates: impl IntoIterator<Item = (u64, i64)>,
    dim: u64,
    p: f64,
    eps: f64,
    seed: u64,
) -> Result<u64> {
    let mut s = LpSampler::new(LpSamplerConfig::new(p, dim, eps, seed))?;
    for (i, v) in updates {
        s.update(i, v)?;
    }
    s.sample()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_transform() {
        // U near 1/2 gives Exp = ln 2
        let half = 1u64 << 63;
        let expect = std::f64::consts::LN_2.powf(-1.0 / 3.0);
        assert!((inverse_exp_root(half, 3.0) - expect).abs() < 1e-12);
        assert!(inverse_exp_root(0, 3.0).is_finite());
        assert!(inverse_exp_root(u64::MAX, 3.0).is_finite());
    }

    #[test]
    fn spike_is_always_sampled() {
        for seed in 0..50 {
            assert_eq!(lp_sample([(17, 5), (17, -2)], 256, 3.0, 0.5, seed).unwrap(), 17);
        }
    }

    #[test]
    fn empty_vector_fails() {
        let err = lp_sample([(3, 4), (3, -4)], 64, 3.0, 0.5, 1).unwrap_err();
        assert!(matches!(err, Error::SamplerFailure(_)));
    }

    #[test]
    fn parameter_checks() {
        assert!(LpSampler::new(LpSamplerConfig::new(2.0, 10, 0.5, 0)).is_err());
        assert!(LpSampler::new(LpSamplerConfig::new(3.0, 10, 0.0, 0)).is_err());
        assert!(LpSampler::new(LpSamplerConfig::new(3.0, 0, 0.5, 0)).is_err());
    }
}
