//! Exact distinguishing experiments: finite-state machines reading `n`-bit
//! blocks, run once on truly uniform input and once on every seed of a fixed
//! generator draw, compared in total variation.

pub mod zoo;

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hashprg::{HashPrg, Variant};
use crate::seed::derive_seed;

/// Transition evaluations allowed for one exact computation.
pub const ENUMERATION_BUDGET: u128 = 1_000_000_000;

/// A deterministic machine over `n`-bit blocks.
pub trait Fsm: Sync {
    fn state_count(&self) -> usize;

    fn start_state(&self) -> usize {
        0
    }

    /// Next state; must stay below `state_count()`.
    fn step(&self, state: usize, block: u64) -> usize;
}

impl<F: Fsm + ?Sized> Fsm for &F {
    fn state_count(&self) -> usize {
        (**self).state_count()
    }

    fn start_state(&self) -> usize {
        (**self).start_state()
    }

    fn step(&self, state: usize, block: u64) -> usize {
        (**self).step(state, block)
    }
}

impl<F: Fsm + ?Sized> Fsm for Box<F> {
    fn state_count(&self) -> usize {
        (**self).state_count()
    }

    fn start_state(&self) -> usize {
        (**self).start_state()
    }

    fn step(&self, state: usize, block: u64) -> usize {
        (**self).step(state, block)
    }
}

/// Final-state distribution of a machine.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution(Vec<f64>);

impl StateDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        let total: f64 = probabilities.iter().sum();
        if probabilities.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::Param(format!("not a probability vector (sum {total})")));
        }
        Ok(Self(probabilities))
    }

    pub fn point_mass(states: usize, at: usize) -> Self {
        let mut p = vec![0.0; states];
        p[at] = 1.0;
        Self(p)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn run_fsm<F: Fsm + ?Sized>(fsm: &F, blocks: impl IntoIterator<Item = u64>) -> usize {
    blocks.into_iter().fold(fsm.start_state(), |s, x| fsm.step(s, x))
}

fn check_budget(requested: u128) -> Result<()> {
    if requested > ENUMERATION_BUDGET {
        Err(Error::Budget {
            requested,
            limit: ENUMERATION_BUDGET,
        })
    } else {
        Ok(())
    }
}

fn check_alphabet(n: u32) -> Result<()> {
    if (1..=40).contains(&n) {
        Ok(())
    } else {
        Err(Error::Param(format!("alphabet of {n}-bit blocks cannot be enumerated")))
    }
}

/// One-step transition matrix under a uniform block, as counts out of `2^n`.
fn step_counts<F: Fsm + ?Sized>(fsm: &F, n: u32) -> Vec<Vec<(usize, u64)>> {
    let states = fsm.state_count();
    (0..states)
        .map(|s| {
            let mut hits = vec![0u64; states];
            for x in 0..(1u64 << n) {
                hits[fsm.step(s, x)] += 1;
            }
            hits.into_iter().enumerate().filter(|&(_, c)| c > 0).collect()
        })
        .collect()
}

fn propagate(counts: &[Vec<(usize, u64)>], n: u32, start: usize, steps: u64) -> Vec<f64> {
    let scale = 1.0 / (1u64 << n) as f64;
    let mut dist = vec![0.0; counts.len()];
    dist[start] = 1.0;
    for _ in 0..steps {
        let mut next = vec![0.0; counts.len()];
        for (s, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for &(t, c) in &counts[s] {
                next[t] += mass * c as f64 * scale;
            }
        }
        dist = next;
    }
    dist
}

/// Exact final-state distribution after `steps` uniform `n`-bit blocks.
pub fn uniform_distribution<F: Fsm + ?Sized>(fsm: &F, n: u32, steps: u64) -> Result<StateDistribution> {
    check_alphabet(n)?;
    check_budget((1u128 << n) * fsm.state_count() as u128 * u128::from(steps))?;
    if steps == 0 {
        return Ok(StateDistribution::point_mass(fsm.state_count(), fsm.start_state()));
    }
    let counts = step_counts(fsm, n);
    Ok(StateDistribution(propagate(&counts, n, fsm.start_state(), steps)))
}

/// Exact final-state distribution when the machine reads the generator's full
/// output, averaged over every seed word with the hashes held fixed.
pub fn prg_distribution<F: Fsm + ?Sized>(fsm: &F, prg: &HashPrg) -> Result<StateDistribution> {
    let n = prg.block_bits();
    check_alphabet(n)?;
    check_budget((1u128 << n) * u128::from(prg.len()))?;
    let mut hist = vec![0u64; fsm.state_count()];
    for x in 0..(1u64 << n) {
        let g = prg.with_seed(x);
        hist[run_fsm(fsm, g.stream_view(0, g.len())?)] += 1;
    }
    let total = (1u64 << n) as f64;
    Ok(StateDistribution(hist.into_iter().map(|c| c as f64 / total).collect()))
}

pub fn tv_distance(a: &StateDistribution, b: &StateDistribution) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Mismatch(format!(
            "distributions over {} and {} states",
            a.len(),
            b.len()
        )));
    }
    Ok(0.5 * a.0.iter().zip(&b.0).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// Worst total variation distance over all start states between the
/// generator's output and uniform blocks.
pub fn worst_start_tv<F: Fsm + ?Sized>(fsm: &F, prg: &HashPrg) -> Result<f64> {
    let n = prg.block_bits();
    check_alphabet(n)?;
    let states = fsm.state_count();
    let steps = prg.len();
    check_budget((1u128 << n) * u128::from(steps) * states as u128)?;
    let counts = step_counts(fsm, n);
    let mut hist = vec![vec![0u64; states]; states];
    let mut buf = Vec::with_capacity(steps as usize);
    for x in 0..(1u64 << n) {
        let g = prg.with_seed(x);
        buf.clear();
        buf.extend(g.stream_view(0, steps)?);
        for (start, row) in hist.iter_mut().enumerate() {
            let end = buf.iter().fold(start, |s, &b| fsm.step(s, b));
            row[end] += 1;
        }
    }
    let total = (1u64 << n) as f64;
    let mut worst = 0.0f64;
    for (start, row) in hist.iter().enumerate() {
        let uniform = propagate(&counts, n, start, steps);
        let tv = 0.5
            * row
                .iter()
                .zip(&uniform)
                .map(|(&c, u)| (c as f64 / total - u).abs())
                .sum::<f64>();
        worst = worst.max(tv);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub block_bits: u32,
    pub branching: u64,
    pub depth: u32,
    pub states: usize,
    /// Per-draw distance, in draw order.
    pub tv: Vec<f64>,
}

impl SweepSummary {
    pub fn mean(&self) -> f64 {
        if self.tv.is_empty() {
            0.0
        } else {
            self.tv.iter().sum::<f64>() / self.tv.len() as f64
        }
    }

    pub fn max(&self) -> f64 {
        self.tv.iter().copied().fold(0.0, f64::max)
    }

    /// Empirical quantile by the nearest-rank rule.
    pub fn quantile(&self, q: f64) -> f64 {
        if self.tv.is_empty() {
            return 0.0;
        }
        let mut sorted = self.tv.clone();
        sorted.sort_by(f64::total_cmp);
        let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
        sorted[rank - 1]
    }

    /// Number of draws at or below `threshold`.
    pub fn count_within(&self, threshold: f64) -> usize {
        self.tv.iter().filter(|&&t| t <= threshold).count()
    }

    /// CSV with columns `n,b,k,states,draw_index,tv`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,b,k,states,draw_index,tv\n");
        for (i, tv) in self.tv.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                self.block_bits, self.branching, self.depth, self.states, i, tv
            );
        }
        out
    }
}

/// Draws `hash_draws` independent generators and records, for each, the
/// worst-start total variation distance from uniform input.
pub fn distinguish_sweep<F: Fsm + ?Sized>(
    fsm: &F,
    n: u32,
    b: u64,
    k: u32,
    hash_draws: usize,
    master_seed: u64,
    variant: Variant,
) -> Result<SweepSummary> {
    let tv = (0..hash_draws)
        .into_par_iter()
        .map(|draw| {
            let seed = derive_seed(master_seed, draw as u64);
            let prg = match variant {
                Variant::HashPrg => HashPrg::new(n, b, k, seed)?,
                Variant::Nisan => HashPrg::nisan(n, k, seed)?,
            };
            worst_start_tv(fsm, &prg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepSummary {
        block_bits: n,
        branching: b,
        depth: k,
        states: fsm.state_count(),
        tv,
    })
}
