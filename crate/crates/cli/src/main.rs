//! `rwre`: simulate random walks in random environments and infer their laws
//! from a single trajectory.

mod commands;
mod config;
mod error;
mod files;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{Overrides, RunConfig};
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "rwre", version, about = "Random walks in iid random environments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Smallest stream length reported by `estimate`.
    #[arg(long)]
    min_count: Option<usize>,
    /// Degree of the multinomial CDF approximation.
    #[arg(long)]
    degree: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Cap on the length of each replica.
    #[arg(long)]
    max_steps: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Fixture {
    Example1,
    Example2,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a walk in a random environment drawn from the configured law.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Estimate the reinforcement function from a trajectory file.
    Estimate {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Split observed jumps into returning and non-returning ones.
    Classify {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Extract independent replica walks from a trajectory file.
    Resample {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Moments and CDF of the environment law, from a trajectory, a report, or
    /// (without input) the configured law.
    Reconstruct {
        input: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run reference fixtures; exits with status 4 if any check fails.
    Fixture {
        #[arg(required = true, value_enum)]
        names: Vec<Fixture>,
        #[command(flatten)]
        common: Common,
    },
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let flags = Overrides {
            seed: self.seed,
            steps: self.steps,
            out: self.out.clone(),
            min_count: self.min_count,
            degree: self.degree,
            replicas: self.replicas,
            max_steps: self.max_steps,
        };
        RunConfig::load(self.config.as_deref(), &flags)
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("RWRE_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(format!("RWRE_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Simulate { common } => commands::simulate(&common.load()?),
        Command::Estimate { input, common } => commands::estimate(&input, &common.load()?),
        Command::Classify { input, common } => commands::classify(&input, &common.load()?),
        Command::Resample { input, common } => commands::resample(&input, &common.load()?),
        Command::Reconstruct { input, common } => commands::reconstruct(input.as_deref(), &common.load()?),
        Command::Fixture { names, common } => {
            let cfg = common.load()?;
            let mut names: Vec<String> = names
                .iter()
                .map(|f| match f {
                    Fixture::Example1 => "example1".to_string(),
                    Fixture::Example2 => "example2".to_string(),
                })
                .collect();
            names.dedup();
            commands::fixture(&names, common.steps.unwrap_or(commands::FIXTURE_STEPS), &cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
