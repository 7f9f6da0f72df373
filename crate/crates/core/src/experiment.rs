//! Config-driven experiments: each trial gets a derived seed, rows are
//! written to CSV, and a one-line summary is returned.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::countsketch::{default_prg, CountSketch};
use crate::error::{param, Error, Result};
use crate::fp_high::{lp_sample, FpHighConfig, FpHighSketch, LpSampler, LpSamplerConfig};
use crate::fp_low::{FpLowConfig, FpLowSketch};
use crate::fsmlab::{worst_start_tv, zoo};
use crate::hashing::count_evaluations;
use crate::hashprg::PrgParams;
use crate::linf::{LinfConfig, LinfSketch, LinfVariant};
use crate::seed::{derive_seed, stream};
use crate::stream::{gen_synthetic, replay_oracle, Shape, TurnstileStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Task {
    FpHigh,
    FpLow,
    Linf,
    CountsketchErr,
    PrgTv,
    LpSample,
}

impl Task {
    pub const ALL: [Task; 6] = [
        Task::FpHigh,
        Task::FpLow,
        Task::Linf,
        Task::CountsketchErr,
        Task::PrgTv,
        Task::LpSample,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::FpHigh => "fp-high",
            Task::FpLow => "fp-low",
            Task::Linf => "linf",
            Task::CountsketchErr => "countsketch-err",
            Task::PrgTv => "prg-tv",
            Task::LpSample => "lp-sample",
        }
    }

    /// Accepted parameters and their defaults.
    pub fn defaults(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Task::FpHigh => &[("d", "10000"), ("p", "3"), ("copies", "5"), ("shape", "gaussian"), ("factor", "8")],
            Task::FpLow => &[("d", "10000"), ("p", "1"), ("eps", "0.1"), ("shape", "gaussian"), ("tol", "0.15")],
            Task::Linf => &[("d", "4096"), ("eps", "0.1"), ("shape", "zipf:1"), ("variant", "standard")],
            Task::CountsketchErr => &[
                ("d", "4096"),
                ("width", "64"),
                ("reps", "31"),
                ("bits", "32"),
                ("shape", "gaussian"),
                ("alpha", "1"),
                ("samples", "100"),
                ("max_tail", "0.05"),
            ],
            Task::PrgTv => &[
                ("n", "10"),
                ("b", "4"),
                ("k", "3"),
                ("fsm", "sum-mod-64"),
                ("variant", "hashprg"),
                ("tol", "0.05"),
            ],
            Task::LpSample => &[("d", "1024"), ("p", "3"), ("eps", "0.5"), ("shape", "spike:1")],
        }
    }

    fn header(self) -> &'static [&'static str] {
        match self {
            Task::FpHigh => &["trial", "estimate", "truth", "ratio", "evals_per_update", "success", "error"],
            Task::FpLow => &["trial", "estimate", "truth", "rel_error", "evals_per_update", "success", "error"],
            Task::Linf => &["trial", "estimate", "truth", "l2", "abs_error", "counters", "success", "error"],
            Task::CountsketchErr => &["trial", "alpha", "empirical_tail", "samples", "delta", "success", "error"],
            Task::PrgTv => &["n", "b", "k", "states", "draw_index", "tv", "success", "error"],
            Task::LpSample => &["trial", "sample", "value", "success", "error"],
        }
    }

    fn metric(self) -> &'static str {
        match self {
            Task::FpHigh => "ratio",
            Task::FpLow => "rel_error",
            Task::Linf => "abs_error/l2",
            Task::CountsketchErr => "empirical_tail",
            Task::PrgTv => "tv",
            Task::LpSample => "failure_rate",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Param(format!("unknown task {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub seed: u64,
    pub trials: usize,
    pub out: Option<PathBuf>,
    /// Task parameters; missing keys take the task's defaults.
    pub params: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn new(task: Task, seed: u64, trials: usize) -> Self {
        Self {
            task,
            seed,
            trials,
            out: None,
            params: BTreeMap::new(),
        }
    }

    pub fn set(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_out(mut self, out: impl Into<PathBuf>) -> Self {
        self.out = Some(out.into());
        self
    }

    fn raw(&self, key: &str) -> &str {
        self.params
            .get(key)
            .map(String::as_str)
            .or_else(|| self.task.defaults().iter().find(|(k, _)| *k == key).map(|(_, v)| *v))
            .unwrap_or("")
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let raw = self.raw(key);
        raw.parse()
            .map_err(|e| Error::Param(format!("{}: bad value {raw:?} for {key}: {e}", self.task)))
    }

    /// Checks every parameter before anything runs.
    pub fn validate(&self) -> Result<TaskParams> {
        for key in self.params.keys() {
            if !self.task.defaults().iter().any(|(k, _)| k == key) {
                return param(format!("{} does not take parameter {key:?}", self.task));
            }
        }
        let params = match self.task {
            Task::FpHigh => TaskParams::FpHigh {
                dim: self.get("d")?,
                p: self.get("p")?,
                copies: self.get("copies")?,
                shape: self.get("shape")?,
                factor: self.get("factor")?,
            },
            Task::FpLow => TaskParams::FpLow {
                dim: self.get("d")?,
                p: self.get("p")?,
                eps: self.get("eps")?,
                shape: self.get("shape")?,
                tol: self.get("tol")?,
            },
            Task::Linf => TaskParams::Linf {
                dim: self.get("d")?,
                eps: self.get("eps")?,
                shape: self.get("shape")?,
                variant: self.get("variant")?,
            },
            Task::CountsketchErr => TaskParams::CountsketchErr {
                dim: self.get("d")?,
                width: self.get("width")?,
                reps: self.get("reps")?,
                bits: self.get("bits")?,
                shape: self.get("shape")?,
                alpha: self.get("alpha")?,
                samples: self.get("samples")?,
                max_tail: self.get("max_tail")?,
            },
            Task::PrgTv => TaskParams::PrgTv {
                prg: PrgParams {
                    block_bits: self.get("n")?,
                    branching: self.get("b")?,
                    depth: self.get("k")?,
                    master_seed: self.seed,
                    variant: self.get("variant")?,
                },
                fsm: self.get("fsm")?,
                tol: self.get("tol")?,
            },
            Task::LpSample => TaskParams::LpSample {
                dim: self.get("d")?,
                p: self.get("p")?,
                eps: self.get("eps")?,
                shape: self.get("shape")?,
            },
        };
        params.check()?;
        Ok(params)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut task = None;
        let mut seed = 0;
        let mut trials = 1;
        let mut out = None;
        let mut params = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::Parse { line: n + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "task" => task = Some(value.parse::<Task>().map_err(|e| bad(e.to_string()))?),
                "seed" => seed = value.parse().map_err(|e| bad(format!("seed: {e}")))?,
                "trials" => trials = value.parse().map_err(|e| bad(format!("trials: {e}")))?,
                "out" => out = Some(PathBuf::from(value)),
                _ => {
                    if params.insert(key.to_string(), value.to_string()).is_some() {
                        return Err(bad(format!("duplicate key {key:?}")));
                    }
                }
            }
        }
        let task = task.ok_or(Error::Parse {
            line: text.lines().count().max(1),
            msg: "missing task=".into(),
        })?;
        Ok(Self {
            task,
            seed,
            trials,
            out,
            params,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "task={}", self.task)?;
        writeln!(f, "seed={}", self.seed)?;
        writeln!(f, "trials={}", self.trials)?;
        if let Some(out) = &self.out {
            writeln!(f, "out={}", out.display())?;
        }
        for (k, v) in &self.params {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Validated, typed task parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum TaskParams {
    FpHigh { dim: u64, p: f64, copies: usize, shape: Shape, factor: f64 },
    FpLow { dim: u64, p: f64, eps: f64, shape: Shape, tol: f64 },
    Linf { dim: u64, eps: f64, shape: Shape, variant: LinfVariant },
    CountsketchErr {
        dim: u64,
        width: usize,
        reps: usize,
        bits: u32,
        shape: Shape,
        alpha: f64,
        samples: usize,
        max_tail: f64,
    },
    PrgTv { prg: PrgParams, fsm: String, tol: f64 },
    LpSample { dim: u64, p: f64, eps: f64, shape: Shape },
}

impl TaskParams {
    /// Builds every sketch once with a throwaway seed so bad geometry is
    /// rejected before the run starts.
    fn check(&self) -> Result<()> {
        let dim_of = |d: u64| if d == 0 { param("dimension must be positive") } else { Ok(()) };
        match self {
            TaskParams::FpHigh { dim, p, copies, factor, .. } => {
                dim_of(*dim)?;
                if !(*factor >= 1.0) {
                    return param("factor must be at least 1");
                }
                let mut c = FpHighConfig::new(*p, *dim, 1, 0);
                c.copies = *copies;
                FpHighSketch::new(c).map(drop)
            }
            TaskParams::FpLow { dim, p, eps, tol, .. } => {
                dim_of(*dim)?;
                if !(*tol > 0.0) {
                    return param("tol must be positive");
                }
                FpLowConfig::new(*p, *dim, *eps, 1, 0).validate()
            }
            TaskParams::Linf { dim, eps, variant, .. } => {
                dim_of(*dim)?;
                LinfSketch::new(LinfConfig::new(*dim, *eps, 1, *variant, 0)).map(drop)
            }
            TaskParams::CountsketchErr { dim, width, reps, bits, alpha, samples, .. } => {
                if *samples == 0 || !(*alpha > 0.0) {
                    return param("samples and alpha must be positive");
                }
                dim_of(*dim)?;
                CountSketch::new(default_prg(*bits, *dim, *reps, 0)?, *dim, *width, *reps, 1).map(drop)
            }
            TaskParams::PrgTv { prg, fsm, .. } => {
                zoo::by_name(fsm)?;
                prg.build().map(drop)
            }
            TaskParams::LpSample { dim, p, eps, .. } => {
                dim_of(*dim)?;
                LpSampler::new(LpSamplerConfig::new(*p, *dim, *eps, 0)).map(drop)
            }
        }
    }
}

/// Outcome of one trial.
struct Outcome {
    fields: Vec<String>,
    success: bool,
    metric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub task: Task,
    pub trials: usize,
    pub successes: usize,
    pub errors: usize,
    /// Mean of the task's error metric over trials without errors.
    pub mean_metric: f64,
}

impl Summary {
    pub fn success_fraction(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {}/{} trials succeeded ({:.3}), mean {} {:.4}, {} errors",
            self.task,
            self.successes,
            self.trials,
            self.success_fraction(),
            self.task.metric(),
            self.mean_metric,
            self.errors
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub csv: String,
    pub summary: Summary,
}

/// Seed of trial `t`.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    derive_seed(master, trial as u64)
}

/// Runs every trial, writes the CSV to `config.out` if set, and returns it.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    let params = config.validate()?;
    let outcomes: Vec<Result<Outcome>> = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(&params, t, trial_seed(config.seed, t)))
        .collect();

    let header = config.task.header();
    let mut csv = header.join(",");
    csv.push('\n');
    let mut successes = 0;
    let mut errors = 0;
    let mut metric_sum = 0.0;
    for (t, outcome) in outcomes.into_iter().enumerate() {
        let mut row = match outcome {
            Ok(o) => {
                successes += o.success as usize;
                metric_sum += o.metric;
                let mut row = o.fields;
                row.push(o.success.to_string());
                row.push(String::new());
                row
            }
            Err(e) => {
                errors += 1;
                let mut row = vec![String::new(); header.len()];
                row[first_numeric_column(config.task)] = t.to_string();
                row[header.len() - 2] = "false".into();
                row[header.len() - 1] = csv_escape(&e.to_string());
                row
            }
        };
        row.truncate(header.len());
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    let clean = config.trials - errors;
    let summary = Summary {
        task: config.task,
        trials: config.trials,
        successes,
        errors,
        mean_metric: if clean == 0 { 0.0 } else { metric_sum / clean as f64 },
    };
    if let Some(out) = &config.out {
        write_atomic(out, &csv)?;
    }
    Ok(Report { csv, summary })
}

fn first_numeric_column(task: Task) -> usize {
    if task == Task::PrgTv {
        4
    } else {
        0
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

/// Writes to a sibling temp file, then renames over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn workload(shape: Shape, dim: u64, seed: u64) -> Result<(TurnstileStream, crate::stream::Oracle)> {
    let s = gen_synthetic(shape, dim, derive_seed(seed, 0))?;
    let o = replay_oracle(&s)?;
    Ok((s, o))
}

fn per_update(evals: u64, updates: usize) -> f64 {
    if updates == 0 {
        0.0
    } else {
        evals as f64 / updates as f64
    }
}

fn run_trial(params: &TaskParams, trial: usize, seed: u64) -> Result<Outcome> {
    let sketch_seed = derive_seed(seed, 1);
    match params {
        TaskParams::FpHigh { dim, p, copies, shape, factor } => {
            let (s, o) = workload(*shape, *dim, seed)?;
            let mut c = FpHighConfig::new(*p, *dim, o.linf().max(1) as i64, sketch_seed);
            c.copies = *copies;
            let mut sk = FpHighSketch::new(c)?;
            let (res, evals) = count_evaluations(|| s.updates().iter().try_for_each(|&(i, v)| sk.update(i, v)));
            res?;
            let est = sk.estimate();
            let truth = o.norm(*p);
            let ratio = if truth == 0.0 { if est == 0.0 { 1.0 } else { f64::INFINITY } } else { est / truth };
            Ok(Outcome {
                fields: vec![
                    trial.to_string(),
                    est.to_string(),
                    truth.to_string(),
                    ratio.to_string(),
                    per_update(evals, s.len()).to_string(),
                ],
                success: ratio >= 1.0 / factor && ratio <= *factor,
                metric: ratio,
            })
        }
        TaskParams::FpLow { dim, p, eps, shape, tol } => {
            let (s, o) = workload(*shape, *dim, seed)?;
            let mut sk = FpLowSketch::new(FpLowConfig::new(*p, *dim, *eps, s.bound(), sketch_seed))?;
            let (res, evals) = count_evaluations(|| s.updates().iter().try_for_each(|&(i, v)| sk.update(i, v)));
            res?;
            let est = sk.estimate()?;
            let truth = o.moment(*p);
            let rel = if truth == 0.0 { est.abs() } else { (est / truth - 1.0).abs() };
            Ok(Outcome {
                fields: vec![
                    trial.to_string(),
                    est.to_string(),
                    truth.to_string(),
                    rel.to_string(),
                    per_update(evals, s.len()).to_string(),
                ],
                success: rel <= *tol,
                metric: rel,
            })
        }
        TaskParams::Linf { dim, eps, shape, variant } => {
            let (s, o) = workload(*shape, *dim, seed)?;
            let mut sk = LinfSketch::new(LinfConfig::new(*dim, *eps, s.bound(), *variant, sketch_seed))?;
            for &(i, v) in s.updates() {
                sk.update(i, v)?;
            }
            let est = sk.estimate()?;
            let truth = o.linf();
            let err = (est as f64 - truth as f64).abs();
            let l2 = o.l2();
            Ok(Outcome {
                fields: vec![
                    trial.to_string(),
                    est.to_string(),
                    truth.to_string(),
                    l2.to_string(),
                    err.to_string(),
                    sk.counter_count().to_string(),
                ],
                success: err <= eps * l2,
                metric: if l2 == 0.0 { 0.0 } else { err / l2 },
            })
        }
        TaskParams::CountsketchErr { dim, width, reps, bits, shape, alpha, samples, max_tail } => {
            let (s, o) = workload(*shape, *dim, seed)?;
            let prg = default_prg(*bits, *dim, *reps, sketch_seed)?;
            let mut cs = CountSketch::new(prg, *dim, *width, *reps, s.bound())?;
            for &(i, v) in s.updates() {
                cs.update(i, v)?;
            }
            let delta = o.tail_delta(*width);
            let mut rng = stream(derive_seed(seed, 2));
            let mut exceed = 0;
            for _ in 0..*samples {
                let l = rng.random_range(0..*dim);
                let err = (cs.estimate(l)? - o.vector()[l as usize]).unsigned_abs() as f64;
                exceed += (err > alpha * delta) as usize;
            }
            let tail = exceed as f64 / *samples as f64;
            Ok(Outcome {
                fields: vec![
                    trial.to_string(),
                    alpha.to_string(),
                    tail.to_string(),
                    samples.to_string(),
                    delta.to_string(),
                ],
                success: tail <= *max_tail,
                metric: tail,
            })
        }
        TaskParams::PrgTv { prg, fsm, tol } => {
            let machine = zoo::by_name(fsm)?;
            let mut draw = *prg;
            draw.master_seed = seed;
            let tv = worst_start_tv(&machine, &draw.build()?)?;
            Ok(Outcome {
                fields: vec![
                    prg.block_bits.to_string(),
                    prg.branching.to_string(),
                    prg.depth.to_string(),
                    machine.state_count().to_string(),
                    trial.to_string(),
                    tv.to_string(),
                ],
                success: tv <= *tol,
                metric: tv,
            })
        }
        TaskParams::LpSample { dim, p, eps, shape } => {
            let (s, o) = workload(*shape, *dim, seed)?;
            let i = lp_sample(s.updates().iter().copied(), *dim, *p, *eps, sketch_seed)?;
            let value = o.vector()[i as usize];
            Ok(Outcome {
                fields: vec![trial.to_string(), i.to_string(), value.to_string()],
                success: value != 0,
                metric: (value == 0) as u8 as f64,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(task: Task) -> ExperimentConfig {
        let c = ExperimentConfig::new(task, 7, 3);
        match task {
            Task::FpHigh => c.set("d", 500),
            Task::FpLow => c.set("d", 300).set("eps", 0.25),
            Task::Linf => c.set("d", 256).set("eps", 0.25),
            Task::CountsketchErr => c.set("d", 256).set("width", 16).set("reps", 5).set("samples", 20),
            Task::PrgTv => c.set("n", 8).set("b", 2).set("k", 2).set("fsm", "parity"),
            Task::LpSample => c.set("d", 64),
        }
    }

    #[test]
    fn config_round_trip() {
        let c = small(Task::Linf).with_out("/tmp/x.csv").set("variant", "tight");
        let text = c.to_string();
        assert_eq!(ExperimentConfig::parse(&text).unwrap(), c);
        assert_eq!(ExperimentConfig::parse(&text).unwrap().to_string(), text);
        let parsed = ExperimentConfig::parse("# comment\ntask = prg-tv\n\nseed=3\nk=2\n").unwrap();
        assert_eq!((parsed.task, parsed.seed, parsed.trials), (Task::PrgTv, 3, 1));
        assert!(matches!(ExperimentConfig::parse("seed=3\n"), Err(Error::Parse { .. })));
        assert!(matches!(ExperimentConfig::parse("task=fp-high\nnonsense\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(ExperimentConfig::parse("task=fp-mid\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn validation_happens_first() {
        assert!(small(Task::FpHigh).set("q", 1).validate().is_err());
        assert!(small(Task::FpHigh).set("p", 1.5).validate().is_err());
        assert!(small(Task::FpLow).set("eps", 0.5).validate().is_err());
        assert!(small(Task::Linf).set("variant", "loose").validate().is_err());
        assert!(small(Task::CountsketchErr).set("width", 12).validate().is_err());
        assert!(small(Task::PrgTv).set("fsm", "nope").validate().is_err());
        assert!(small(Task::LpSample).set("shape", "cauchy").validate().is_err());
        for task in Task::ALL {
            assert!(small(task).validate().is_ok(), "{task}");
            assert_eq!(task.name().parse::<Task>().unwrap(), task);
        }
    }

    #[test]
    fn zero_trials_is_header_only() {
        for task in Task::ALL {
            let mut c = small(task);
            c.trials = 0;
            let r = run_experiment(&c).unwrap();
            assert_eq!(r.csv, format!("{}\n", task.header().join(",")));
            assert_eq!(r.summary.trials, 0);
        }
    }

    #[test]
    fn every_task_runs_deterministically() {
        for task in Task::ALL {
            let a = run_experiment(&small(task)).unwrap();
            let b = run_experiment(&small(task)).unwrap();
            assert_eq!(a, b, "{task}");
            assert_eq!(a.csv.lines().count(), 4);
            assert_eq!(a.summary.errors, 0, "{task}: {}", a.csv);
            for line in a.csv.lines() {
                assert_eq!(line.split(',').count(), task.header().len());
            }
        }
    }

    #[test]
    fn task_errors_become_rows() {
        // an all-zero vector leaves the sampler nothing to return
        let c = small(Task::LpSample).set("shape", "spike:0");
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.summary.errors, 3);
        assert_eq!(r.summary.successes, 0);
        let row = r.csv.lines().nth(2).unwrap();
        assert!(row.starts_with("1,,,false,"), "{row}");
    }

    #[test]
    fn csv_is_written_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let r = run_experiment(&small(Task::PrgTv).with_out(&path)).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), r.csv);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(r.summary.to_string().starts_with("prg-tv: "));
    }
}
