//! Turnstile streams: text format, synthetic workloads, and an exact oracle.
//!
//! The text format is a header line `d m M` followed by `m` lines
//! `index delta`.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::countsketch::tail_delta;
use crate::error::{param, Error, Result};
use crate::seed;

/// Largest dimension the dense oracle will materialize.
pub const ORACLE_DIM_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurnstileStream {
    dim: u64,
    bound: i64,
    updates: Vec<(u64, i64)>,
}

impl TurnstileStream {
    pub fn new(dim: u64, bound: i64, updates: Vec<(u64, i64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("dimension must be positive".into()));
        }
        if bound <= 0 {
            return Err(Error::Validation("update bound must be positive".into()));
        }
        for (n, &(i, v)) in updates.iter().enumerate() {
            check_update(i, v, dim, bound).map_err(|msg| Error::Validation(format!("update {n}: {msg}")))?;
        }
        Ok(Self { dim, bound, updates })
    }

    pub fn dim(&self) -> u64 {
        self.dim
    }

    pub fn bound(&self) -> i64 {
        self.bound
    }

    pub fn updates(&self) -> &[(u64, i64)] {
        &self.updates
    }

    pub fn len(&self) -> usize {
        self.updates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.updates.is_empty()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let [dim, count, bound] = fields::<3>(header, 1)?;
        let dim: u64 = number(dim, 1)?;
        let count: usize = number(count, 1)?;
        let bound: i64 = number(bound, 1)?;
        if dim == 0 || bound <= 0 {
            return Err(Error::Validation(format!("header needs d > 0 and M > 0, got d={dim} M={bound}")));
        }
        let mut updates = Vec::with_capacity(count.min(1 << 24));
        for (n, line) in lines {
            let line_no = n + 1;
            if updates.len() == count {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("header declares {count} updates but more follow"),
                });
            }
            let [i, v] = fields::<2>(line, line_no)?;
            let i: u64 = number(i, line_no)?;
            let v: i64 = number(v, line_no)?;
            check_update(i, v, dim, bound).map_err(|msg| Error::Validation(format!("line {line_no}: {msg}")))?;
            updates.push((i, v));
        }
        if updates.len() != count {
            return Err(Error::Parse {
                line: text.lines().count(),
                msg: format!("header declares {count} updates, found {}", updates.len()),
            });
        }
        Ok(Self { dim, bound, updates })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

impl fmt::Display for TurnstileStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {} {}", self.dim, self.updates.len(), self.bound)?;
        for (i, v) in &self.updates {
            writeln!(f, "{i} {v}")?;
        }
        Ok(())
    }
}

impl FromStr for TurnstileStream {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

fn check_update(i: u64, v: i64, dim: u64, bound: i64) -> Result<(), String> {
    if i >= dim {
        return Err(format!("index {i} out of range for d = {dim}"));
    }
    if v.unsigned_abs() > bound as u64 {
        return Err(format!("delta {v} exceeds bound {bound}"));
    }
    Ok(())
}

fn fields<const N: usize>(line: &str, line_no: usize) -> Result<[&str; N]> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    parts.try_into().map_err(|p: Vec<&str>| Error::Parse {
        line: line_no,
        msg: format!("expected {N} fields, found {}", p.len()),
    })
}

fn number<T: FromStr>(s: &str, line_no: usize) -> Result<T>
where
    T::Err: fmt::Display,
{
    s.parse().map_err(|e| Error::Parse {
        line: line_no,
        msg: format!("{s:?}: {e}"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Every coordinate has magnitude 100.
    Flat,
    /// `|x_i|` proportional to `rank^{-alpha}`, top magnitude `10^6`.
    Zipf(f64),
    /// `k` coordinates of magnitude `10^4`, everything else zero.
    Spike(usize),
    /// Rounded normal entries with standard deviation 100.
    Gaussian,
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Flat => f.write_str("flat"),
            Shape::Zipf(a) => write!(f, "zipf:{a}"),
            Shape::Spike(k) => write!(f, "spike:{k}"),
            Shape::Gaussian => f.write_str("gaussian"),
        }
    }
}

impl FromStr for Shape {
    type Err = Error;

    /// `flat`, `gaussian`, `zipf[:alpha]` (alpha defaults to 1), `spike[:k]`
    /// (k defaults to 1).
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once([':', '(']) {
            Some((n, a)) => (n, Some(a.trim_end_matches(')'))),
            None => (s, None),
        };
        let bad = |_| Error::Param(format!("bad shape argument in {s:?}"));
        match (name, arg) {
            ("flat", None) => Ok(Shape::Flat),
            ("gaussian", None) => Ok(Shape::Gaussian),
            ("zipf", None) => Ok(Shape::Zipf(1.0)),
            ("zipf", Some(a)) => Ok(Shape::Zipf(a.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?)),
            ("spike", None) => Ok(Shape::Spike(1)),
            ("spike", Some(k)) => Ok(Shape::Spike(k.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?)),
            _ => param(format!("unknown shape {s:?}")),
        }
    }
}

/// Target vector of a synthetic workload, before it is split into updates.
pub fn synthetic_vector(shape: Shape, dim: u64, seed: u64) -> Result<Vec<i64>> {
    if dim == 0 {
        return param("dimension must be positive");
    }
    if dim > ORACLE_DIM_LIMIT {
        return Err(Error::Budget {
            requested: dim.into(),
            limit: ORACLE_DIM_LIMIT.into(),
        });
    }
    let mut rng = seed::stream(seed);
    let d = dim as usize;
    let mut x = vec![0i64; d];
    let sign = |rng: &mut rand_chacha::ChaCha8Rng| if rng.random::<bool>() { 1 } else { -1 };
    match shape {
        Shape::Flat => x.iter_mut().for_each(|v| *v = 100 * sign(&mut rng)),
        Shape::Gaussian => x.iter_mut().for_each(|v| {
            let g: f64 = rng.sample(StandardNormal);
            *v = (100.0 * g).round() as i64;
        }),
        Shape::Zipf(alpha) => {
            if !(alpha >= 0.0 && alpha.is_finite()) {
                return param(format!("zipf exponent must be non-negative, got {alpha}"));
            }
            let mut order: Vec<usize> = (0..d).collect();
            order.shuffle(&mut rng);
            for (rank, &i) in order.iter().enumerate() {
                x[i] = (1e6 * ((rank + 1) as f64).powf(-alpha)).round() as i64 * sign(&mut rng);
            }
        }
        Shape::Spike(k) => {
            if k as u64 > dim {
                return param(format!("cannot plant {k} spikes in {dim} coordinates"));
            }
            let mut order: Vec<usize> = (0..d).collect();
            order.shuffle(&mut rng);
            for &i in &order[..k] {
                x[i] = 10_000 * sign(&mut rng);
            }
        }
    }
    Ok(x)
}

/// Deterministic turnstile stream whose final vector is
/// `synthetic_vector(shape, d, seed)`. Each nonzero coordinate arrives as two
/// updates with random split, in shuffled order.
pub fn gen_synthetic(shape: Shape, dim: u64, seed: u64) -> Result<TurnstileStream> {
    let x = synthetic_vector(shape, dim, seed)?;
    let bound = x.iter().map(|v| v.abs()).max().unwrap_or(0).max(1);
    let mut rng = seed::stream(seed::derive_seed(seed, 1));
    let mut updates = Vec::new();
    for (i, &v) in x.iter().enumerate() {
        if v == 0 {
            continue;
        }
        let first = rng.random_range((v - bound).max(-bound)..=(v + bound).min(bound));
        updates.push((i as u64, first));
        if v != first {
            updates.push((i as u64, v - first));
        }
    }
    updates.shuffle(&mut rng);
    TurnstileStream::new(dim, bound, updates)
}

/// Streams a dense vector one update per nonzero coordinate.
pub fn from_dense(x: &[i64]) -> Result<TurnstileStream> {
    let bound = x.iter().map(|v| v.abs()).max().unwrap_or(0).max(1);
    let updates = x
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0)
        .map(|(i, &v)| (i as u64, v))
        .collect();
    TurnstileStream::new(x.len() as u64, bound, updates)
}

/// Materialized final vector of a stream with exact statistics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Oracle {
    x: Vec<i64>,
}

impl Oracle {
    pub fn from_vector(x: Vec<i64>) -> Self {
        Self { x }
    }

    pub fn vector(&self) -> &[i64] {
        &self.x
    }

    /// `sum |x_i|^p`; for `p = 0` the number of nonzeros.
    pub fn moment(&self, p: f64) -> f64 {
        if p == 0.0 {
            return self.x.iter().filter(|&&v| v != 0).count() as f64;
        }
        self.x.iter().map(|&v| (v.unsigned_abs() as f64).powf(p)).sum()
    }

    pub fn norm(&self, p: f64) -> f64 {
        if p == 0.0 {
            return self.moment(0.0);
        }
        self.moment(p).powf(1.0 / p)
    }

    /// Exact squared l2 norm.
    pub fn l2_squared(&self) -> u128 {
        self.x.iter().map(|&v| u128::from(v.unsigned_abs()).pow(2)).sum()
    }

    pub fn l2(&self) -> f64 {
        (self.l2_squared() as f64).sqrt()
    }

    pub fn linf(&self) -> u64 {
        self.x.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0)
    }

    /// `||tail_t(x)||_2 / sqrt(t)`.
    pub fn tail_delta(&self, t: usize) -> f64 {
        tail_delta(&self.x, t)
    }

    /// Text summary for the given moments, one `name value` pair per line.
    pub fn summary(&self, moments: &[f64]) -> String {
        let mut out = String::new();
        let nnz = self.moment(0.0) as u64;
        let _ = writeln!(out, "d {}", self.x.len());
        let _ = writeln!(out, "nnz {nnz}");
        let _ = writeln!(out, "l2 {}", self.l2());
        let _ = writeln!(out, "linf {}", self.linf());
        for &p in moments {
            let _ = writeln!(out, "norm_{p} {}", self.norm(p));
        }
        out
    }
}

/// Replays the stream into a dense vector. Running values must stay within
/// `+-d*M`.
pub fn replay_oracle(stream: &TurnstileStream) -> Result<Oracle> {
    if stream.dim > ORACLE_DIM_LIMIT {
        return Err(Error::Budget {
            requested: stream.dim.into(),
            limit: ORACLE_DIM_LIMIT.into(),
        });
    }
    let limit = i128::from(stream.dim) * i128::from(stream.bound);
    let mut x = vec![0i64; stream.dim as usize];
    for (n, &(i, v)) in stream.updates.iter().enumerate() {
        let cell = &mut x[i as usize];
        let next = i128::from(*cell) + i128::from(v);
        if next.abs() > limit || next.abs() > i128::from(i64::MAX) {
            return Err(Error::Validation(format!(
                "update {n}: coordinate {i} reaches {next}, beyond d*M = {limit}"
            )));
        }
        *cell = next as i64;
    }
    Ok(Oracle { x })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        let s = TurnstileStream::parse("4 0 10\n").unwrap();
        assert_eq!((s.dim(), s.len()), (4, 0));
        let s = TurnstileStream::parse("2 1 10\n0 7\n").unwrap();
        assert_eq!(s.updates(), &[(0, 7)]);
        assert!(matches!(TurnstileStream::parse("2 1 10\n5 1\n"), Err(Error::Validation(_))));
        assert!(matches!(TurnstileStream::parse("2 1 10\n0 11\n"), Err(Error::Validation(_))));
        assert!(matches!(TurnstileStream::parse("2 1 10\n0 x\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(TurnstileStream::parse("2 2 10\n0 1\n"), Err(Error::Parse { .. })));
        assert!(matches!(TurnstileStream::parse("2 1 10\n0 1\n1 1\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(TurnstileStream::parse("2 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(TurnstileStream::parse(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn text_round_trip() {
        let s = gen_synthetic(Shape::Gaussian, 50, 3).unwrap();
        assert_eq!(TurnstileStream::parse(&s.to_text()).unwrap(), s);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.txt");
        s.write(&path).unwrap();
        assert_eq!(TurnstileStream::read(&path).unwrap(), s);
    }

    #[test]
    fn shape_names() {
        for s in ["flat", "gaussian", "zipf:1.5", "spike:3"] {
            assert_eq!(s.parse::<Shape>().unwrap().to_string(), s);
        }
        assert_eq!("zipf(1)".parse::<Shape>().unwrap(), Shape::Zipf(1.0));
        assert_eq!("spike".parse::<Shape>().unwrap(), Shape::Spike(1));
        assert!("cauchy".parse::<Shape>().is_err());
        assert!("spike:x".parse::<Shape>().is_err());
    }

    #[test]
    fn synthetic_examples() {
        let spike = replay_oracle(&gen_synthetic(Shape::Spike(1), 100, 1).unwrap()).unwrap();
        assert_eq!(spike.moment(0.0), 1.0);
        let flat = replay_oracle(&gen_synthetic(Shape::Flat, 4, 1).unwrap()).unwrap();
        assert!(flat.vector().iter().all(|v| v.abs() == 100));
        let zipf = replay_oracle(&gen_synthetic(Shape::Zipf(1.0), 1000, 1).unwrap()).unwrap();
        assert!(zipf.linf() as f64 >= 0.5 * zipf.l2());
        assert_eq!(gen_synthetic(Shape::Gaussian, 300, 9).unwrap(), gen_synthetic(Shape::Gaussian, 300, 9).unwrap());
        for shape in [Shape::Flat, Shape::Zipf(0.7), Shape::Spike(5), Shape::Gaussian] {
            let s = gen_synthetic(shape, 257, 4).unwrap();
            assert_eq!(replay_oracle(&s).unwrap().vector(), &synthetic_vector(shape, 257, 4).unwrap()[..]);
        }
    }

    #[test]
    fn oracle_examples() {
        let empty = replay_oracle(&TurnstileStream::new(5, 1, vec![]).unwrap()).unwrap();
        assert_eq!((empty.l2(), empty.linf(), empty.norm(1.0)), (0.0, 0, 0.0));
        let cancel = replay_oracle(&TurnstileStream::new(3, 7, vec![(0, 7), (0, -7)]).unwrap()).unwrap();
        assert_eq!(cancel.vector(), &[0, 0, 0]);
        let o = replay_oracle(&TurnstileStream::new(2, 4, vec![(0, 3), (1, 4)]).unwrap()).unwrap();
        assert_eq!(o.l2(), 5.0);
        assert_eq!(o.norm(1.0), 7.0);
        assert_eq!(o.linf(), 4);
        assert!(o.summary(&[1.0]).contains("l2 5"));
    }

    #[test]
    fn oracle_rejects_runaway_values() {
        let s = TurnstileStream::new(1, 5, vec![(0, 5), (0, 5)]).unwrap();
        assert!(matches!(replay_oracle(&s), Err(Error::Validation(_))));
    }
}
