//! Symmetric p-stable variates from 64 uniform bits, by the
//! Chambers-Mallows-Stuck transform. The law has characteristic function
//! `exp(-|t|^p)`: Cauchy at `p = 1`, `N(0, 2)` at `p = 2`.

use std::f64::consts::PI;

use crate::error::{param, Result};

const SCALE_32: f64 = 1.0 / 4_294_967_296.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableSampler {
    p: f64,
}

impl StableSampler {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 2.0) {
            return param(format!("stability index must lie in (0, 2], got {p}"));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// The high 32 bits give the angle, the low 32 bits the exponential.
    #[inline]
    pub fn sample(&self, bits: u64) -> f64 {
        let p = self.p;
        let theta = PI * (((bits >> 32) as f64 + 0.5) * SCALE_32 - 0.5);
        if p == 1.0 {
            return theta.tan();
        }
        let r = ((bits & 0xFFFF_FFFF) as f64 + 0.5) * SCALE_32;
        let w = -r.ln();
        (p * theta).sin() / theta.cos().powf(1.0 / p)
            * ((theta * (1.0 - p)).cos() / w).powf((1.0 - p) / p)
    }
}

pub fn pstable_sample(bits: u64, p: f64) -> Result<f64> {
    Ok(StableSampler::new(p)?.sample(bits))
}

#[cfg(test)]
mod tests {
    use rand::RngCore;

    use super::*;
    use crate::seed;

    fn draws(p: f64, n: usize, seed: u64) -> Vec<f64> {
        let s = StableSampler::new(p).unwrap();
        let mut rng = seed::stream(seed);
        (0..n).map(|_| s.sample(rng.next_u64())).collect()
    }

    #[test]
    fn rejects_bad_index() {
        assert!(StableSampler::new(0.0).is_err());
        assert!(StableSampler::new(2.5).is_err());
        assert!(StableSampler::new(f64::NAN).is_err());
    }

    #[test]
    fn deterministic_in_bits() {
        let bits = 0x0123_4567_89AB_CDEF;
        assert_eq!(pstable_sample(bits, 1.3).unwrap(), pstable_sample(bits, 1.3).unwrap());
        // angle 0 gives 0 for every p
        let centre = 0x7FFF_FFFF_u64 << 32;
        assert!(pstable_sample(centre, 0.7).unwrap().abs() < 1e-8);
    }

    #[test]
    fn gaussian_case_variance() {
        let xs = draws(2.0, 100_000, 1);
        let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert!((var / 2.0 - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn cauchy_case_median_abs() {
        let mut xs: Vec<f64> = draws(1.0, 100_000, 2).into_iter().map(f64::abs).collect();
        xs.sort_by(f64::total_cmp);
        let med = xs[xs.len() / 2];
        assert!((med - 1.0).abs() < 0.05, "median |X| {med}");
    }

    #[test]
    fn stability_under_sums() {
        // X1 + X2 has the law of 2^{1/p} X for i.i.d. X1, X2
        let p = 1.5;
        let a = draws(p, 200_000, 3);
        let b = draws(p, 200_000, 4);
        let mut sums: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x + y).abs()).collect();
        let mut single: Vec<f64> = draws(p, 200_000, 5).into_iter().map(f64::abs).collect();
        sums.sort_by(f64::total_cmp);
        single.sort_by(f64::total_cmp);
        let ratio = sums[100_000] / single[100_000];
        assert!((ratio / 2f64.powf(1.0 / p) - 1.0).abs() < 0.03, "ratio {ratio}");
    }
}
