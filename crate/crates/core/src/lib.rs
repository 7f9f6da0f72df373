//! Turnstile streaming sketches whose randomness comes from a fast tree
//! generator for space-bounded computation.

pub mod countsketch;
pub mod error;
pub mod experiment;
pub mod fp_high;
pub mod fp_low;
pub mod fsmlab;
pub mod hashing;
pub mod hashprg;
pub mod linf;
pub mod seed;
pub mod stream;

pub use error::{Error, Result};
pub use hashprg::{BlockSource, HashPrg, PrgParams, RandomBlocks, Variant};
