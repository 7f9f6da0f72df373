//! Additive-error `||x||_inf` estimation: a signed hash map `L: [d] -> [t]`
//! followed by a CountSketch over `[t]`.

use std::fmt;
use std::str::FromStr;

use crate::countsketch::{default_prg, CountSketch};
use crate::error::{check_index, param, Error, Result};
use crate::hashing::KWiseHash;
use crate::hashprg::{depth_for, pow2_floor, HashPrg};
use crate::seed::derive_seed;

/// `(Lx)_j = sum_{h(i) = j} s(i) x_i` with pairwise `h` and 4-wise `s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LMap {
    input_dim: u64,
    output_dim: u64,
    bucket: KWiseHash,
    sign: KWiseHash,
}

impl LMap {
    pub fn new(input_dim: u64, output_dim: u64, seed: u64) -> Result<Self> {
        if input_dim == 0 {
            return param("input dimension must be positive");
        }
        if output_dim == 0 || !output_dim.is_power_of_two() {
            return param(format!("output dimension must be a power of two, got {output_dim}"));
        }
        Ok(Self {
            input_dim,
            output_dim,
            bucket: KWiseHash::new(2, input_dim, output_dim, derive_seed(seed, 0))?,
            sign: KWiseHash::new(4, input_dim, 2, derive_seed(seed, 1))?,
        })
    }

    pub fn input_dim(&self) -> u64 {
        self.input_dim
    }

    pub fn output_dim(&self) -> u64 {
        self.output_dim
    }

    /// `(h(i), s(i) * delta)`.
    pub fn route(&self, i: u64, delta: i64) -> Result<(u64, i64)> {
        check_index(i, self.input_dim)?;
        Ok((self.bucket.eval(i), self.sign.sign(i) * delta))
    }

    /// Dense image `Lx`.
    pub fn apply(&self, x: &[i64]) -> Result<Vec<i64>> {
        if x.len() as u64 != self.input_dim {
            return param(format!("vector has length {}, map expects {}", x.len(), self.input_dim));
        }
        let mut out = vec![0i64; self.output_dim as usize];
        for (i, &v) in x.iter().enumerate() {
            let (j, w) = self.route(i as u64, v)?;
            out[j as usize] += w;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinfVariant {
    Standard,
    Tight,
}

impl fmt::Display for LinfVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinfVariant::Standard => "standard",
            LinfVariant::Tight => "tight",
        })
    }
}

impl FromStr for LinfVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(LinfVariant::Standard),
            "tight" => Ok(LinfVariant::Tight),
            _ => param(format!("unknown linf variant {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinfConfig {
    pub dim: u64,
    pub eps: f64,
    pub bound: i64,
    pub variant: LinfVariant,
    pub seed: u64,
}

fn ceil_log2(x: f64) -> usize {
    x.max(1.0).log2().ceil() as usize
}

impl LinfConfig {
    pub fn new(dim: u64, eps: f64, bound: i64, variant: LinfVariant, seed: u64) -> Self {
        Self {
            dim,
            eps,
            bound,
            variant,
            seed,
        }
    }

    /// `min(d, ceil(eps^-8))` rounded up to a power of two.
    pub fn map_dim(&self) -> u64 {
        let t = self.eps.powi(-8).ceil().min(self.dim as f64) as u64;
        t.max(1).next_power_of_two()
    }

    /// Inner CountSketch width `ceil(2/eps^2)` rounded up to a power of two.
    pub fn width(&self) -> usize {
        ((2.0 / (self.eps * self.eps)).ceil() as usize).next_power_of_two()
    }

    pub fn reps(&self) -> usize {
        match self.variant {
            LinfVariant::Standard => 2 * ceil_log2(self.map_dim() as f64) + 1,
            LinfVariant::Tight => 2 * ceil_log2(1.0 / self.eps) + 1,
        }
    }

    fn inner_prg(&self) -> Result<HashPrg> {
        let seed = derive_seed(self.seed, 1);
        match self.variant {
            LinfVariant::Standard => default_prg(32, self.map_dim(), self.reps(), seed),
            LinfVariant::Tight => {
                let blocks = (self.map_dim() * self.reps() as u64).max(2);
                let b = pow2_floor(1.0 / self.eps);
                HashPrg::new(32, b, depth_for(b, blocks), seed)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinfSketch {
    config: LinfConfig,
    lmap: LMap,
    inner: CountSketch<HashPrg>,
}

impl LinfSketch {
    pub fn new(config: LinfConfig) -> Result<Self> {
        if !(config.eps > 0.0 && config.eps < 1.0) {
            return param(format!("eps must lie in (0, 1), got {}", config.eps));
        }
        let lmap = LMap::new(config.dim, config.map_dim(), derive_seed(config.seed, 0))?;
        let inner = CountSketch::new(
            config.inner_prg()?,
            lmap.output_dim(),
            config.width(),
            config.reps(),
            config.bound,
        )?;
        Ok(Self { config, lmap, inner })
    }

    pub fn config(&self) -> &LinfConfig {
        &self.config
    }

    pub fn lmap(&self) -> &LMap {
        &self.lmap
    }

    pub fn inner(&self) -> &CountSketch<HashPrg> {
        &self.inner
    }

    pub fn counter_count(&self) -> usize {
        self.inner.counter_count()
    }

    pub fn update(&mut self, i: u64, delta: i64) -> Result<()> {
        let (j, w) = self.lmap.route(i, delta)?;
        self.inner.update(j, w)
    }

    /// `max_j |x^_j|` over the inner coordinates.
    pub fn estimate(&self) -> Result<u64> {
        let mut best = 0;
        for j in 0..self.lmap.output_dim() {
            best = best.max(self.inner.estimate(j)?.unsigned_abs());
        }
        Ok(best)
    }

    pub fn merge_from(&mut self, other: &Self) -> Result<()> {
        if self.config != other.config || self.lmap != other.lmap {
            return Err(Error::Mismatch("linf sketches configured differently".into()));
        }
        self.inner.merge_from(&other.inner)
    }
}

/// One-shot estimate over a list of updates.
pub fn linf_estimate(updates: &[(u64, i64)], config: LinfConfig) -> Result<u64> {
    let mut sk = LinfSketch::new(config)?;
    for &(i, v) in updates {
        sk.update(i, v)?;
    }
    sk.estimate()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(variant: LinfVariant, seed: u64) -> LinfConfig {
        LinfConfig::new(4096, 0.1, 1 << 20, variant, seed)
    }

    #[test]
    fn sizes() {
        let s = config(LinfVariant::Standard, 0);
        assert_eq!(s.map_dim(), 4096);
        assert_eq!(s.width(), 256);
        assert_eq!(s.reps(), 25);
        let t = config(LinfVariant::Tight, 0);
        assert_eq!(t.reps(), 9);
        assert_eq!(LinfConfig::new(100, 0.5, 10, LinfVariant::Standard, 0).map_dim(), 128);
        assert_eq!("tight".parse::<LinfVariant>().unwrap(), LinfVariant::Tight);
        assert!("loose".parse::<LinfVariant>().is_err());
    }

    #[test]
    fn route_examples() {
        let m = LMap::new(100, 16, 3).unwrap();
        let (j, w) = m.route(7, 0).unwrap();
        assert!(j < 16);
        assert_eq!(w, 0);
        assert_eq!(m.route(7, 5).unwrap(), m.route(7, 5).unwrap());
        assert_eq!(m.route(7, 5).unwrap().1.abs(), 5);
        assert!(m.route(100, 1).is_err());
    }

    #[test]
    fn spike_is_exact() {
        for variant in [LinfVariant::Standard, LinfVariant::Tight] {
            for seed in 0..3 {
                assert_eq!(linf_estimate(&[], config(variant, seed)).unwrap(), 0);
                assert_eq!(linf_estimate(&[(77, -31)], config(variant, seed)).unwrap(), 31);
            }
        }
    }

    #[test]
    fn merge_is_exact() {
        let mut a = LinfSketch::new(config(LinfVariant::Tight, 5)).unwrap();
        let mut b = a.clone();
        let mut whole = a.clone();
        for i in 0..300u64 {
            let v = (i * 7 % 13) as i64 - 6;
            whole.update(i * 13, v).unwrap();
            if i % 3 == 0 { a.update(i * 13, v).unwrap() } else { b.update(i * 13, v).unwrap() }
        }
        a.merge_from(&b).unwrap();
        assert_eq!(a, whole);
        assert!(a.merge_from(&LinfSketch::new(config(LinfVariant::Tight, 6)).unwrap()).is_err());
    }
}
