//! Hash primitives: pairwise-independent multiply-add-shift hashing on n-bit
//! words, and k-wise independent polynomial hashing over a prime field.
//!
//! Every evaluation bumps a thread-local counter so tests and experiments can
//! report update cost in hash evaluations rather than wall-clock time.

use std::cell::Cell;

use rand::{Rng, RngCore};

use crate::error::{param, Result};
use crate::seed;

thread_local! {
    static EVALUATIONS: Cell<u64> = const { Cell::new(0) };
}

#[inline]
pub(crate) fn tick() {
    EVALUATIONS.with(|c| c.set(c.get() + 1));
}

/// Hash evaluations performed on the current thread so far.
pub fn evaluations() -> u64 {
    EVALUATIONS.with(Cell::get)
}

/// Runs `f` and returns its result together with the number of hash
/// evaluations it performed on this thread.
pub fn count_evaluations<R>(f: impl FnOnce() -> R) -> (R, u64) {
    let before = evaluations();
    let out = f();
    (out, evaluations() - before)
}

#[inline]
fn low_mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Member of the multiply-add-shift family on `n`-bit words:
/// `h(x) = ((a*x + b) mod 2^(2n)) >> n`, with `a` and `b` uniform `2n`-bit words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairwiseHash {
    word_bits: u32,
    multiplier: u128,
    offset: u128,
}

impl PairwiseHash {
    /// Draws a fresh member of the family from `seed`.
    pub fn new(word_bits: u32, seed: u64) -> Result<Self> {
        Self::random(word_bits, &mut seed::stream(seed))
    }

    /// Draws a fresh member of the family from `rng`.
    pub fn random<R: RngCore + ?Sized>(word_bits: u32, rng: &mut R) -> Result<Self> {
        check_word_bits(word_bits)?;
        let a = (u128::from(rng.next_u64()) << 64) | u128::from(rng.next_u64());
        let b = (u128::from(rng.next_u64()) << 64) | u128::from(rng.next_u64());
        Self::with_coefficients(word_bits, a, b)
    }

    /// Fixes the coefficients explicitly. They are reduced to `2n` bits.
    pub fn with_coefficients(word_bits: u32, multiplier: u128, offset: u128) -> Result<Self> {
        check_word_bits(word_bits)?;
        let mask = double_mask(word_bits);
        Ok(Self {
            word_bits,
            multiplier: multiplier & mask,
            offset: offset & mask,
        })
    }

    pub fn word_bits(&self) -> u32 {
        self.word_bits
    }

    pub fn coefficients(&self) -> (u128, u128) {
        (self.multiplier, self.offset)
    }

    /// Evaluates the hash. Bits of `x` above `n` are ignored.
    #[inline]
    pub fn eval(&self, x: u64) -> u64 {
        tick();
        let x = u128::from(x & low_mask(self.word_bits));
        let full = self.multiplier.wrapping_mul(x).wrapping_add(self.offset) & double_mask(self.word_bits);
        (full >> self.word_bits) as u64
    }
}

fn check_word_bits(word_bits: u32) -> Result<()> {
    if (1..=64).contains(&word_bits) {
        Ok(())
    } else {
        param(format!("word size must be in 1..=64 bits, got {word_bits}"))
    }
}

#[inline]
fn double_mask(word_bits: u32) -> u128 {
    if word_bits >= 64 {
        u128::MAX
    } else {
        (1u128 << (2 * word_bits)) - 1
    }
}

/// The Mersenne prime 2^61 - 1 used for all polynomial hashing.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Mersenne61,
    Prime(u64),
}

impl Field {
    fn modulus(self) -> u64 {
        match self {
            Field::Mersenne61 => MERSENNE_61,
            Field::Prime(p) => p,
        }
    }

    #[inline]
    fn mul_add(self, acc: u64, x: u64, c: u64) -> u64 {
        let wide = u128::from(acc) * u128::from(x) + u128::from(c);
        match self {
            Field::Mersenne61 => {
                let p = u128::from(MERSENNE_61);
                let folded = (wide & p) + (wide >> 61);
                let folded = (folded & p) + (folded >> 61);
                let r = folded as u64;
                if r >= MERSENNE_61 {
                    r - MERSENNE_61
                } else {
                    r
                }
            }
            Field::Prime(p) => (wide % u128::from(p)) as u64,
        }
    }
}

/// Degree `k-1` polynomial over a prime field, reduced mod `range`.
///
/// For keys in `[0, domain)` with `domain` no larger than the field, any `k`
/// distinct keys map to jointly (near-)uniform values in `[0, range)`; the
/// bias from `range` not dividing the prime is at most `k / p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KWiseHash {
    coefficients: Vec<u64>,
    field: Field,
    domain: u64,
    range: u64,
}

impl KWiseHash {
    /// Random k-wise independent hash `[0, domain) -> [0, range)` over 2^61 - 1.
    pub fn new(independence: usize, domain: u64, range: u64, seed: u64) -> Result<Self> {
        Self::random(independence, domain, range, &mut seed::stream(seed))
    }

    pub fn random<R: RngCore + ?Sized>(
        independence: usize,
        domain: u64,
        range: u64,
        rng: &mut R,
    ) -> Result<Self> {
        if independence == 0 {
            return param("independence must be at least 1");
        }
        let coefficients = (0..independence)
            .map(|_| rng.random_range(0..MERSENNE_61))
            .collect();
        Self::build(coefficients, Field::Mersenne61, domain, range)
    }

    /// Explicit coefficients (constant term first) over the prime `prime`.
    /// The domain is taken to be the whole field.
    pub fn with_coefficients(coefficients: Vec<u64>, prime: u64, range: u64) -> Result<Self> {
        if coefficients.is_empty() {
            return param("independence must be at least 1");
        }
        if prime < 2 {
            return param(format!("field modulus {prime} is not a prime"));
        }
        let field = if prime == MERSENNE_61 {
            Field::Mersenne61
        } else {
            Field::Prime(prime)
        };
        let coefficients = coefficients.into_iter().map(|c| c % prime).collect();
        Self::build(coefficients, field, prime, range)
    }

    fn build(coefficients: Vec<u64>, field: Field, domain: u64, range: u64) -> Result<Self> {
        let p = field.modulus();
        if range == 0 {
            return param("hash range must be at least 1");
        }
        if domain > p || range > p {
            return param(format!(
                "domain {domain} or range {range} exceeds the field size {p}"
            ));
        }
        Ok(Self {
            coefficients,
            field,
            domain,
            range,
        })
    }

    pub fn independence(&self) -> usize {
        self.coefficients.len()
    }

    pub fn domain(&self) -> u64 {
        self.domain
    }

    pub fn range(&self) -> u64 {
        self.range
    }

    /// Evaluates the polynomial at `x` and reduces into `[0, range)`.
    #[inline]
    pub fn eval(&self, x: u64) -> u64 {
        tick();
        debug_assert!(x < self.domain, "key {x} outside domain {}", self.domain);
        let mut acc = 0u64;
        for &c in self.coefficients.iter().rev() {
            acc = self.field.mul_add(acc, x, c);
        }
        acc % self.range
    }

    /// Sign view of a range-2 hash: 0 maps to +1, 1 maps to -1.
    #[inline]
    pub fn sign(&self, x: u64) -> i64 {
        debug_assert_eq!(self.range, 2, "sign hash must have range 2");
        1 - 2 * (self.eval(x) & 1) as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coefficients_hash_to_zero() {
        let h = PairwiseHash::with_coefficients(4, 0, 0).unwrap();
        assert!((0..16).all(|x| h.eval(x) == 0));
    }

    #[test]
    fn shift_multiplier_is_identity_on_four_bits() {
        // (16x mod 256) >> 4 = x for x < 16
        let h = PairwiseHash::with_coefficients(4, 16, 0).unwrap();
        for x in 0..16 {
            assert_eq!(h.eval(x), x);
        }
    }

    #[test]
    fn hand_computed_eval() {
        // n = 8: (37 * 200 + 1000) mod 65536 = 8400, 8400 >> 8 = 32
        let h = PairwiseHash::with_coefficients(8, 37, 1000).unwrap();
        assert_eq!(h.eval(200), 32);
        assert_eq!(h.eval(200), h.eval(200));
        // n = 64 uses the full 128-bit product
        let h = PairwiseHash::with_coefficients(64, 3u128 << 64, 5).unwrap();
        assert_eq!(h.eval(u64::MAX), u64::MAX - 2);
    }

    #[test]
    fn word_bits_validated() {
        assert!(PairwiseHash::new(0, 1).is_err());
        assert!(PairwiseHash::new(65, 1).is_err());
        assert!(PairwiseHash::new(64, 1).is_ok());
    }

    #[test]
    fn outputs_stay_in_range() {
        for n in [1, 3, 10, 33, 63] {
            let h = PairwiseHash::new(n, 99).unwrap();
            assert!((0..1000).all(|x| h.eval(x) < (1 << n)));
        }
    }

    #[test]
    fn pairwise_joint_probability() {
        let n = 3;
        let trials = 100_000u32;
        let mut rng = seed::stream(2024);
        let (y, y2) = (2, 5);
        let hits = (0..trials)
            .filter(|_| {
                let h = PairwiseHash::random(n, &mut rng).unwrap();
                h.eval(3) == y && h.eval(7) == y2
            })
            .count();
        let p = 1.0 / f64::from(1u32 << (2 * n));
        let se = (p * (1.0 - p) / f64::from(trials)).sqrt();
        let freq = hits as f64 / f64::from(trials);
        assert!((freq - p).abs() <= 3.0 * se, "freq {freq} vs {p} (se {se})");
    }

    #[test]
    fn constant_polynomial() {
        let h = KWiseHash::with_coefficients(vec![12], MERSENNE_61, 5).unwrap();
        assert!((0..100).all(|x| h.eval(x) == 2));
    }

    #[test]
    fn hand_polynomial_mod_17() {
        let h = KWiseHash::with_coefficients(vec![3, 5], 17, 17).unwrap();
        assert_eq!(h.eval(2), 13);
        // 3 + 5*7 = 38 = 4 (mod 17)
        assert_eq!(h.eval(7), 4);
    }

    #[test]
    fn mersenne_reduction_matches_naive() {
        let coeffs = vec![MERSENNE_61 - 1, 123_456_789_012, 987_654_321, 42];
        let h = KWiseHash::with_coefficients(coeffs.clone(), MERSENNE_61, MERSENNE_61).unwrap();
        let p = u128::from(MERSENNE_61);
        for x in [0u64, 1, 2, 1 << 40, MERSENNE_61 - 1] {
            let mut acc = 0u128;
            for &c in coeffs.iter().rev() {
                acc = (acc * u128::from(x) + u128::from(c)) % p;
            }
            assert_eq!(u128::from(h.eval(x)), acc);
        }
    }

    #[test]
    fn kwise_parameters_validated() {
        assert!(KWiseHash::new(0, 10, 2, 1).is_err());
        assert!(KWiseHash::new(2, 10, 0, 1).is_err());
        assert!(KWiseHash::new(2, MERSENNE_61 + 1, 2, 1).is_err());
        assert!(KWiseHash::new(2, 10, 3, 1).is_ok());
    }

    #[test]
    fn four_wise_joint_uniform() {
        let trials = 100_000u32;
        let mut counts = [0u32; 16];
        let mut rng = seed::stream(77);
        for _ in 0..trials {
            let h = KWiseHash::random(4, 16, 2, &mut rng).unwrap();
            let cell = (1..=4).fold(0, |acc, x| (acc << 1) | h.eval(x) as usize);
            counts[cell] += 1;
        }
        let p = 1.0 / 16.0;
        let se = (p * (1.0 - p) / f64::from(trials)).sqrt();
        for c in counts {
            let f = f64::from(c) / f64::from(trials);
            assert!((f - p).abs() <= 3.0 * se, "cell freq {f}");
        }
    }

    #[test]
    fn sign_mapping() {
        let plus = KWiseHash::with_coefficients(vec![0], MERSENNE_61, 2).unwrap();
        let minus = KWiseHash::with_coefficients(vec![1], MERSENNE_61, 2).unwrap();
        assert!((0..50).all(|x| plus.sign(x) == 1 && minus.sign(x) == -1));
    }

    #[test]
    fn sign_is_balanced() {
        let trials = 100_000;
        let mut rng = seed::stream(5);
        let sum: i64 = (0..trials)
            .map(|_| KWiseHash::random(2, 100, 2, &mut rng).unwrap().sign(17))
            .sum();
        let mean = sum as f64 / trials as f64;
        assert!(mean.abs() <= 3.0 / (trials as f64).sqrt(), "mean sign {mean}");
    }

    #[test]
    fn evaluation_counter() {
        let h = PairwiseHash::new(16, 1).unwrap();
        let g = KWiseHash::new(3, 100, 7, 1).unwrap();
        let (_, n) = count_evaluations(|| {
            h.eval(1);
            h.eval(2);
            g.eval(3);
        });
        assert_eq!(n, 3);
    }
}
