use rand_distr::{Distribution, StandardNormal};

use super::CountSketch;
use crate::error::{check_index, param, Error, Result};
use crate::hashprg::BlockSource;
use crate::seed;

/// CountSketch released with i.i.d. Gaussian noise added to every cell.
///
/// Updates go to the exact sketch until [`finalize`](Self::finalize) draws
/// the noise; after that the sketch is read-only.
#[derive(Debug, Clone)]
pub struct PrivateCountSketch<S> {
    base: CountSketch<S>,
    sigma: f64,
    noise: Option<Vec<f64>>,
}

impl<S: BlockSource> PrivateCountSketch<S> {
    pub fn new(base: CountSketch<S>) -> Self {
        Self {
            base,
            sigma: 0.0,
            noise: None,
        }
    }

    pub fn base(&self) -> &CountSketch<S> {
        &self.base
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn is_finalized(&self) -> bool {
        self.noise.is_some()
    }

    pub fn update(&mut self, l: u64, v: i64) -> Result<()> {
        if self.is_finalized() {
            return Err(Error::AlreadyFinalized);
        }
        self.base.update(l, v)
    }

    /// Draws `N(0, sigma^2)` noise for every cell from `noise_seed`.
    pub fn finalize(&mut self, sigma: f64, noise_seed: u64) -> Result<()> {
        if self.is_finalized() {
            return Err(Error::AlreadyFinalized);
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return param(format!("noise scale must be a finite non-negative number, got {sigma}"));
        }
        let mut rng = seed::stream(noise_seed);
        let noise = (0..self.base.counter_count())
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sigma * z
            })
            .collect();
        self.sigma = sigma;
        self.noise = Some(noise);
        Ok(())
    }

    /// Median over repetitions of the signed noisy bucket value.
    pub fn estimate(&self, l: u64) -> Result<f64> {
        let noise = self.noise.as_ref().ok_or(Error::NotFinalized)?;
        let cs = &self.base;
        check_index(l, cs.dim)?;
        let mut vals: Vec<f64> = (0..cs.reps)
            .map(|i| {
                let (bucket, sign) = cs.decode_at(i, l);
                let cell = i * cs.width + bucket;
                sign as f64 * (cs.table[cell] as f64 + noise[cell])
            })
            .collect();
        let mid = vals.len() / 2;
        Ok(*vals.select_nth_unstable_by(mid, f64::total_cmp).1)
    }
}

#[cfg(test)]
mod tests {
    use statrs::distribution::{Continuous, ContinuousCDF, Normal};

    use super::*;
    use crate::countsketch::default_prg;
    use crate::hashprg::HashPrg;

    fn base(seed: u64) -> CountSketch<HashPrg> {
        CountSketch::new(default_prg(32, 500, 7, seed).unwrap(), 500, 32, 7, 1000).unwrap()
    }

    #[test]
    fn zero_noise_matches_plain_estimate() {
        let mut p = PrivateCountSketch::new(base(1));
        for (l, v) in [(3, 10), (40, -7), (3, 2), (499, 900)] {
            p.update(l, v).unwrap();
        }
        p.finalize(0.0, 9).unwrap();
        for l in [3, 40, 499, 100] {
            assert_eq!(p.estimate(l).unwrap(), p.base().estimate(l).unwrap() as f64);
        }
    }

    #[test]
    fn lifecycle_errors() {
        let mut p = PrivateCountSketch::new(base(2));
        assert!(matches!(p.estimate(0), Err(Error::NotFinalized)));
        assert!(p.finalize(-1.0, 0).is_err());
        p.finalize(1.0, 0).unwrap();
        assert!(matches!(p.finalize(1.0, 0), Err(Error::AlreadyFinalized)));
        assert!(matches!(p.update(0, 1), Err(Error::AlreadyFinalized)));
    }

    #[test]
    fn noise_is_reproducible() {
        let mut a = PrivateCountSketch::new(base(3));
        let mut b = PrivateCountSketch::new(base(3));
        a.finalize(2.0, 44).unwrap();
        b.finalize(2.0, 44).unwrap();
        assert_eq!(a.estimate(7).unwrap(), b.estimate(7).unwrap());
    }

    /// Standard deviation of the median of `r` standard normals, by
    /// integrating the order-statistic density.
    fn median_sd(r: usize) -> f64 {
        let k = r / 2;
        let norm = Normal::standard();
        let mut log_coef = 0.0;
        for j in 1..=r {
            log_coef += (j as f64).ln();
        }
        for j in 1..=k {
            log_coef -= 2.0 * (j as f64).ln();
        }
        let coef = log_coef.exp();
        let h = 1e-3;
        let mut var = 0.0;
        let mut x = -8.0;
        while x <= 8.0 {
            let f = norm.cdf(x);
            var += x * x * coef * f.powi(k as i32) * (1.0 - f).powi(k as i32) * norm.pdf(x) * h;
            x += h;
        }
        var.sqrt()
    }

    #[test]
    fn noise_only_median_spread() {
        let r = 7;
        let prg = default_prg(32, 64, r, 5).unwrap();
        let trials = 10_000;
        let samples: Vec<f64> = (0..trials)
            .map(|s| {
                let cs = CountSketch::new(&prg, 64, 16, r, 10).unwrap();
                let mut p = PrivateCountSketch::new(cs);
                p.finalize(1.0, s).unwrap();
                p.estimate(s % 64).unwrap()
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / trials as f64;
        let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt();
        let oracle = median_sd(r);
        assert!((sd / oracle - 1.0).abs() < 0.2, "sd {sd} vs oracle {oracle}");
    }
}
