//! The tree generator: a seed word pushed through `k` levels of pairwise
//! hashes, with the base-`b` digits of the block index choosing one of `b`
//! hashes at every level.
//!
//! Block `j` with digits `j_{k-1} .. j_0` is
//! `h_0^{(j_0)}(h_1^{(j_1)}( ... h_{k-1}^{(j_{k-1})}(x)))`: the most significant
//! digit picks the hash applied to the seed first.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;

use crate::error::{check_index, param, Error, Result};
use crate::hashing::{tick, PairwiseHash};
use crate::seed;

/// One hash slot of the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelHash {
    Identity,
    Pairwise(PairwiseHash),
    /// `x ^ mask`; handy for hand-checkable generators in tests.
    Xor(u64),
}

impl LevelHash {
    #[inline]
    fn apply(&self, x: u64, word_mask: u64) -> u64 {
        match self {
            LevelHash::Identity => {
                tick();
                x
            }
            LevelHash::Pairwise(h) => h.eval(x),
            LevelHash::Xor(m) => {
                tick();
                (x ^ m) & word_mask
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    HashPrg,
    Nisan,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::HashPrg => "hashprg",
            Variant::Nisan => "nisan",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hashprg" => Ok(Variant::HashPrg),
            "nisan" => Ok(Variant::Nisan),
            other => param(format!("unknown generator variant `{other}`")),
        }
    }
}

/// Everything needed to rebuild a generator. Serializes as five decimal
/// fields `n b k seed variant`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrgParams {
    pub block_bits: u32,
    pub branching: u64,
    pub depth: u32,
    pub master_seed: u64,
    pub variant: Variant,
}

impl PrgParams {
    pub fn build(&self) -> Result<HashPrg> {
        match self.variant {
            Variant::HashPrg => HashPrg::new(self.block_bits, self.branching, self.depth, self.master_seed),
            Variant::Nisan => {
                if self.branching != 2 {
                    return param("the nisan variant requires branching 2");
                }
                HashPrg::nisan(self.block_bits, self.depth, self.master_seed)
            }
        }
    }
}

impl fmt::Display for PrgParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let variant = match self.variant {
            Variant::HashPrg => 0,
            Variant::Nisan => 1,
        };
        write!(
            f,
            "{} {} {} {} {}",
            self.block_bits, self.branching, self.depth, self.master_seed, variant
        )
    }
}

impl FromStr for PrgParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let fields: Vec<&str> = s.split_whitespace().collect();
        if fields.len() != 5 {
            return param(format!("expected 5 generator fields, got {}", fields.len()));
        }
        let num = |i: usize| -> Result<u64> {
            fields[i]
                .parse()
                .map_err(|_| Error::Param(format!("bad generator field `{}`", fields[i])))
        };
        let variant = match num(4)? {
            0 => Variant::HashPrg,
            1 => Variant::Nisan,
            v => return param(format!("unknown generator variant code {v}")),
        };
        let narrow = |v: u64| u32::try_from(v).map_err(|_| Error::Param(format!("field {v} too large")));
        Ok(Self {
            block_bits: narrow(num(0)?)?,
            branching: num(1)?,
            depth: narrow(num(2)?)?,
            master_seed: num(3)?,
            variant,
        })
    }
}

/// Anything that hands out indexed `n`-bit blocks: the generator itself or a
/// materialized table of truly random words.
pub trait BlockSource {
    fn block_bits(&self) -> u32;
    /// Number of addressable blocks.
    fn capacity(&self) -> u64;
    /// Block `j`; `j` must be below `capacity()`.
    fn fetch(&self, j: u64) -> u64;
}

impl<T: BlockSource + ?Sized> BlockSource for &T {
    fn block_bits(&self) -> u32 {
        (**self).block_bits()
    }

    fn capacity(&self) -> u64 {
        (**self).capacity()
    }

    #[inline]
    fn fetch(&self, j: u64) -> u64 {
        (**self).fetch(j)
    }
}

impl<T: BlockSource + ?Sized> BlockSource for std::sync::Arc<T> {
    fn block_bits(&self) -> u32 {
        (**self).block_bits()
    }

    fn capacity(&self) -> u64 {
        (**self).capacity()
    }

    #[inline]
    fn fetch(&self, j: u64) -> u64 {
        (**self).fetch(j)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashPrg {
    block_bits: u32,
    branch_bits: u32,
    depth: u32,
    seed_word: u64,
    rows: Vec<Vec<LevelHash>>,
    variant: Variant,
}

fn word_mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1 << bits) - 1
    }
}

fn check_shape(branching: u64, depth: u32) -> Result<u32> {
    if branching < 2 || !branching.is_power_of_two() {
        return param(format!("branching must be a power of two >= 2, got {branching}"));
    }
    let branch_bits = branching.trailing_zeros();
    if u64::from(branch_bits) * u64::from(depth) > 63 {
        return param(format!("{branching}^{depth} blocks do not fit in a 63-bit index"));
    }
    Ok(branch_bits)
}

fn check_block_bits(n: u32) -> Result<()> {
    if (8..=64).contains(&n) {
        Ok(())
    } else {
        param(format!("block size must be in 8..=64 bits, got {n}"))
    }
}

impl HashPrg {
    /// Samples the `b*k` hashes and the seed word from `master_seed`.
    pub fn new(block_bits: u32, branching: u64, depth: u32, master_seed: u64) -> Result<Self> {
        check_block_bits(block_bits)?;
        let branch_bits = check_shape(branching, depth)?;
        let mut rng = seed::stream(master_seed);
        let seed_word = rng.next_u64() & word_mask(block_bits);
        let rows = (0..depth)
            .map(|_| {
                (0..branching)
                    .map(|_| PairwiseHash::random(block_bits, &mut rng).map(LevelHash::Pairwise))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            block_bits,
            branch_bits,
            depth,
            seed_word,
            rows,
            variant: Variant::HashPrg,
        })
    }

    /// Nisan's generator: branching 2 with branch 0 the identity at every
    /// level, so only `k` hashes are sampled.
    pub fn nisan(block_bits: u32, depth: u32, master_seed: u64) -> Result<Self> {
        check_block_bits(block_bits)?;
        check_shape(2, depth)?;
        let mut rng = seed::stream(master_seed);
        let seed_word = rng.next_u64() & word_mask(block_bits);
        let rows = (0..depth)
            .map(|_| {
                let h = PairwiseHash::random(block_bits, &mut rng)?;
                Ok(vec![LevelHash::Identity, LevelHash::Pairwise(h)])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            block_bits,
            branch_bits: 1,
            depth,
            seed_word,
            rows,
            variant: Variant::Nisan,
        })
    }

    /// Assembles a generator from explicit hashes. `rows[i]` holds level `i`,
    /// one entry per branch. Any word size in `1..=64` is accepted here.
    pub fn from_parts(block_bits: u32, seed_word: u64, rows: Vec<Vec<LevelHash>>) -> Result<Self> {
        if !(1..=64).contains(&block_bits) {
            return param(format!("block size must be in 1..=64 bits, got {block_bits}"));
        }
        let depth = u32::try_from(rows.len()).map_err(|_| Error::Param("too many levels".into()))?;
        let branching = rows.first().map_or(2, |r| r.len() as u64);
        let branch_bits = check_shape(branching, depth)?;
        if rows.iter().any(|r| r.len() as u64 != branching) {
            return param("every level needs the same number of branches");
        }
        for h in rows.iter().flatten() {
            if let LevelHash::Pairwise(p) = h {
                if p.word_bits() != block_bits {
                    return param("pairwise hash word size differs from the block size");
                }
            }
        }
        let nisan = branching == 2 && rows.iter().all(|r| r[0] == LevelHash::Identity);
        Ok(Self {
            block_bits,
            branch_bits,
            depth,
            seed_word: seed_word & word_mask(block_bits),
            rows,
            variant: if nisan { Variant::Nisan } else { Variant::HashPrg },
        })
    }

    pub fn block_bits(&self) -> u32 {
        self.block_bits
    }

    pub fn branching(&self) -> u64 {
        1 << self.branch_bits
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn seed_word(&self) -> u64 {
        self.seed_word
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Hash table, `rows()[i][j] = h_i^{(j)}`.
    pub fn rows(&self) -> &[Vec<LevelHash>] {
        &self.rows
    }

    /// Output length in blocks, `b^k`.
    pub fn len(&self) -> u64 {
        1 << (self.branch_bits * self.depth)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Same hashes, different seed word.
    pub fn with_seed(&self, seed_word: u64) -> Self {
        Self {
            seed_word: seed_word & word_mask(self.block_bits),
            ..self.clone()
        }
    }

    /// Copy of this generator with branch 0 replaced by the identity at every
    /// level. Only meaningful for branching 2, where it yields Nisan's
    /// construction from the general one.
    pub fn with_identity_branch(&self) -> Self {
        let mut out = self.clone();
        for row in &mut out.rows {
            row[0] = LevelHash::Identity;
        }
        if out.branch_bits == 1 {
            out.variant = Variant::Nisan;
        }
        out
    }

    /// Block `j`, costing exactly `k` hash evaluations.
    pub fn block(&self, j: u64) -> Result<u64> {
        check_index(j, self.len())?;
        Ok(self.block_at(j))
    }

    #[inline]
    fn block_at(&self, j: u64) -> u64 {
        let mask = word_mask(self.block_bits);
        let digit_mask = (1u64 << self.branch_bits) - 1;
        let mut x = self.seed_word;
        for level in (0..self.depth as usize).rev() {
            let digit = (j >> (level as u32 * self.branch_bits)) & digit_mask;
            x = self.rows[level][digit as usize].apply(x, mask);
        }
        x
    }

    /// Generator whose level `i` branch `j` is this generator's branch
    /// `j ^ l_i`, with `l_i` the `i`-th base-`b` digit of `l`. Its block `i`
    /// equals this generator's block `i ^ l`.
    pub fn relabel(&self, l: u64) -> Result<Self> {
        check_index(l, self.len())?;
        let digit_mask = (1u64 << self.branch_bits) - 1;
        let rows = self
            .rows
            .iter()
            .enumerate()
            .map(|(level, row)| {
                let li = ((l >> (level as u32 * self.branch_bits)) & digit_mask) as usize;
                (0..row.len()).map(|j| row[j ^ li]).collect()
            })
            .collect();
        let mut out = Self {
            rows,
            ..self.clone()
        };
        if l != 0 && out.variant == Variant::Nisan {
            out.variant = Variant::HashPrg;
        }
        Ok(out)
    }

    /// Lazily yields blocks `start .. start + count`. Consecutive indices
    /// share their high digits, so only the changed suffix of the hash path
    /// is recomputed.
    pub fn stream_view(&self, start: u64, count: u64) -> Result<Blocks<'_>> {
        let end = start
            .checked_add(count)
            .filter(|&e| e <= self.len())
            .ok_or(Error::OutOfRange {
                index: start.saturating_add(count),
                limit: self.len(),
            })?;
        Ok(Blocks {
            prg: self,
            next: start,
            end,
            path: vec![0; self.depth as usize],
            fresh: true,
        })
    }
}

impl BlockSource for HashPrg {
    fn block_bits(&self) -> u32 {
        self.block_bits
    }

    fn capacity(&self) -> u64 {
        self.len()
    }

    #[inline]
    fn fetch(&self, j: u64) -> u64 {
        debug_assert!(j < self.len());
        self.block_at(j)
    }
}

/// Iterator returned by [`HashPrg::stream_view`].
#[derive(Debug, Clone)]
pub struct Blocks<'a> {
    prg: &'a HashPrg,
    next: u64,
    end: u64,
    // path[i] is the value after applying the level-i hash
    path: Vec<u64>,
    fresh: bool,
}

impl Iterator for Blocks<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        if self.next >= self.end {
            return None;
        }
        let j = self.next;
        let prg = self.prg;
        let k = prg.depth as usize;
        if k == 0 {
            self.next += 1;
            return Some(prg.seed_word);
        }
        let top = if self.fresh {
            self.fresh = false;
            k - 1
        } else {
            let changed = (j ^ (j - 1)).ilog2() / prg.branch_bits;
            changed as usize
        };
        let mask = word_mask(prg.block_bits);
        let digit_mask = (1u64 << prg.branch_bits) - 1;
        for level in (0..=top).rev() {
            let input = if level + 1 == k { prg.seed_word } else { self.path[level + 1] };
            let digit = (j >> (level as u32 * prg.branch_bits)) & digit_mask;
            self.path[level] = prg.rows[level][digit as usize].apply(input, mask);
        }
        self.next += 1;
        Some(self.path[0])
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Blocks<'_> {}

/// Truly random blocks drawn from a fresh ChaCha stream and stored in full.
/// The baseline every derandomized sketch is compared against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomBlocks {
    block_bits: u32,
    words: Vec<u64>,
}

impl RandomBlocks {
    pub fn new(block_bits: u32, len: u64, seed: u64) -> Result<Self> {
        if !(1..=64).contains(&block_bits) {
            return param(format!("block size must be in 1..=64 bits, got {block_bits}"));
        }
        let mut rng = seed::stream(seed);
        let mask = word_mask(block_bits);
        let words = (0..len).map(|_| rng.next_u64() & mask).collect();
        Ok(Self { block_bits, words })
    }
}

impl BlockSource for RandomBlocks {
    fn block_bits(&self) -> u32 {
        self.block_bits
    }

    fn capacity(&self) -> u64 {
        self.words.len() as u64
    }

    #[inline]
    fn fetch(&self, j: u64) -> u64 {
        self.words[j as usize]
    }
}

/// Smallest `k` with `b^k >= count`.
pub fn depth_for(branching: u64, count: u64) -> u32 {
    let mut k = 0;
    let mut span = 1u128;
    while span < u128::from(count) {
        span *= u128::from(branching);
        k += 1;
    }
    k
}

/// Largest power of two not exceeding `x` (at least 2).
pub fn pow2_floor(x: f64) -> u64 {
    if x < 2.0 {
        2
    } else {
        1 << (x.log2().floor() as u32).min(62)
    }
}
