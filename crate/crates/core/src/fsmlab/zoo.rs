//! Small built-in machines used as distinguishers.

use super::Fsm;
use crate::error::{param, Result};

/// Running sum of the blocks modulo `m`.
#[derive(Debug, Clone, Copy)]
pub struct SumMod {
    pub modulus: usize,
}

impl Fsm for SumMod {
    fn state_count(&self) -> usize {
        self.modulus
    }

    fn step(&self, state: usize, block: u64) -> usize {
        ((state as u64 + block % self.modulus as u64) % self.modulus as u64) as usize
    }
}

/// Two states; flips whenever a block is odd.
#[derive(Debug, Clone, Copy)]
pub struct Parity;

impl Fsm for Parity {
    fn state_count(&self) -> usize {
        2
    }

    fn step(&self, state: usize, block: u64) -> usize {
        state ^ (block & 1) as usize
    }
}

/// Counts blocks at or above `threshold`, saturating at `cap`.
#[derive(Debug, Clone, Copy)]
pub struct Threshold {
    pub threshold: u64,
    pub cap: usize,
}

impl Fsm for Threshold {
    fn state_count(&self) -> usize {
        self.cap + 1
    }

    fn step(&self, state: usize, block: u64) -> usize {
        if block >= self.threshold {
            (state + 1).min(self.cap)
        } else {
            state
        }
    }
}

/// Never leaves its start state.
#[derive(Debug, Clone, Copy)]
pub struct Stuck {
    pub states: usize,
    pub start: usize,
}

impl Fsm for Stuck {
    fn state_count(&self) -> usize {
        self.states
    }

    fn start_state(&self) -> usize {
        self.start
    }

    fn step(&self, state: usize, _block: u64) -> usize {
        state
    }
}

/// Looks up a zoo machine by name: `sum-mod-<m>`, `parity`,
/// `threshold-<t>-<cap>`, `identity-<states>`.
pub fn by_name(name: &str) -> Result<Box<dyn Fsm>> {
    let bad = || param::<Box<dyn Fsm>>(format!("unknown machine `{name}`"));
    let num = |s: &str| s.parse::<u64>().ok();
    if name == "parity" {
        return Ok(Box::new(Parity));
    }
    if let Some(m) = name.strip_prefix("sum-mod-").and_then(num) {
        if m == 0 {
            return bad();
        }
        return Ok(Box::new(SumMod { modulus: m as usize }));
    }
    if let Some(s) = name.strip_prefix("identity-").and_then(num) {
        if s == 0 {
            return bad();
        }
        return Ok(Box::new(Stuck { states: s as usize, start: 0 }));
    }
    if let Some((t, cap)) = name.strip_prefix("threshold-").and_then(|r| r.split_once('-')) {
        if let (Some(t), Some(cap)) = (num(t), num(cap)) {
            return Ok(Box::new(Threshold { threshold: t, cap: cap as usize }));
        }
    }
    bad()
}
