//! `kinmob`: equilibria, indicators, sweeps and level lines of the kinetic exchange model.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use crate::config::{config_error, ConfigError, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "kinmob", version, about = "Kinetic exchange model with taxation, welfare and mobility indicators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.out_dir`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads, 0 = one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Reserved. The model is deterministic and the flag is rejected.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one equilibrium and write its indicators.
    Simulate,
    /// Solve two regimes and write the changes in G, M and the mobility histograms.
    Compare {
        /// Configuration of the second regime.
        #[arg(long)]
        config_b: PathBuf,
    },
    /// Evaluate G, M and TR on a grid of rate gaps and welfare parameters.
    Sweep,
    /// Trace lines of constant Gini index in the (delta_tau, gamma) plane.
    Levelline,
    /// Find the mean income that gives the reference regime its target Gini index.
    Calibrate,
    /// Gini index of the kappa-generalized distribution.
    Kappa,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Compare { .. } => "compare",
            Command::Sweep => "sweep",
            Command::Levelline => "levelline",
            Command::Calibrate => "calibrate",
            Command::Kappa => "kappa",
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if cli.seed.is_some() {
        return Err(config_error("--seed is reserved: the model is deterministic"));
    }
    let path = cli.config.as_ref().ok_or_else(|| config_error("--config <path> is required"))?;
    let cfg = RunConfig::load(path)?;
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| config_error(format!("cannot start {} threads: {e}", cli.threads)))?;
    }
    let ctx = commands::RunContext {
        command: cli.command.name(),
        out_dir: commands::out_dir(cli.out_dir.as_deref(), &cfg),
        threads: rayon::current_num_threads(),
    };
    match &cli.command {
        Command::Simulate => commands::simulate(&ctx, &cfg),
        Command::Compare { config_b } => commands::compare(&ctx, &cfg, &RunConfig::load(config_b)?),
        Command::Sweep => commands::sweep(&ctx, &cfg),
        Command::Levelline => commands::levelline(&ctx, &cfg),
        Command::Calibrate => commands::calibrate(&ctx, &cfg),
        Command::Kappa => commands::kappa(&ctx, &cfg),
    }
}

/// 2 for configuration problems, 1 for numerical and I/O failures.
fn exit_status(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<kinmob::Error>() {
            return match e {
                kinmob::Error::InvalidArgument(_) => 2,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_status(&e))
        }
    }
}
