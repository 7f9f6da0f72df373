use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use prgsketch::experiment::{run_experiment, ExperimentConfig, Task};
use prgsketch::stream::{gen_synthetic, replay_oracle, Shape, TurnstileStream};
use prgsketch::Error;

#[derive(Parser)]
#[command(name = "prgsketch", version, about = "Turnstile sketches driven by a tree pseudorandom generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic turnstile stream.
    GenStream {
        /// flat, gaussian, zipf[:alpha] or spike[:k]
        #[arg(long, default_value = "gaussian")]
        shape: String,
        #[arg(long, default_value_t = 1000)]
        d: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the experiment described by a key=value config file.
    Run {
        config: PathBuf,
        /// Overrides the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print exact statistics of a stream file.
    Oracle {
        stream: PathBuf,
        /// Extra p values for ||x||_p.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 3.0])]
        p: Vec<f64>,
    },
    /// F_p estimation for p > 2.
    FpHigh {
        #[arg(long, default_value_t = 10_000)]
        d: u64,
        #[arg(long, default_value_t = 3.0)]
        p: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 5)]
        copies: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// F_p estimation for 0 < p < 2.
    FpLow {
        #[arg(long, default_value_t = 10_000)]
        d: u64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Additive-error l_inf estimation.
    Linf {
        #[arg(long, default_value_t = 4096)]
        d: u64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value = "zipf")]
        shape: String,
        #[arg(long, default_value = "standard")]
        variant: String,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn experiment(config: ExperimentConfig) -> Result<(), Error> {
    let report = run_experiment(&config)?;
    if config.out.is_some() {
        println!("{}", report.summary);
    } else {
        print!("{}", report.csv);
        eprintln!("{}", report.summary);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::GenStream { shape, d, seed, out } => {
            let stream = gen_synthetic(shape.parse::<Shape>()?, d, seed)?;
            match out {
                Some(path) => stream.write(path)?,
                None => print!("{stream}"),
            }
        }
        Command::Run { config, out } => {
            let mut config = ExperimentConfig::read(config)?;
            if out.is_some() {
                config.out = out;
            }
            experiment(config)?;
        }
        Command::Oracle { stream, p } => {
            let oracle = replay_oracle(&TurnstileStream::read(stream)?)?;
            print!("{}", oracle.summary(&p));
        }
        Command::FpHigh { d, p, trials, copies, seed, out } => {
            let mut c = ExperimentConfig::new(Task::FpHigh, seed, trials)
                .set("d", d)
                .set("p", p)
                .set("copies", copies);
            c.out = out;
            experiment(c)?;
        }
        Command::FpLow { d, p, eps, trials, seed, out } => {
            let mut c = ExperimentConfig::new(Task::FpLow, seed, trials)
                .set("d", d)
                .set("p", p)
                .set("eps", eps);
            c.out = out;
            experiment(c)?;
        }
        Command::Linf { d, eps, shape, variant, trials, seed, out } => {
            let mut c = ExperimentConfig::new(Task::Linf, seed, trials)
                .set("d", d)
                .set("eps", eps)
                .set("shape", shape)
                .set("variant", variant);
            c.out = out;
            experiment(c)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
