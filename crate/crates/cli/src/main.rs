//! `liqrec` — simulation, estimation, and calibration toolkit for the
//! DeFi-to-money-market liquidity recycling analysis.
//!
//! Commands: `simulate`, `estimate <which>`, `placebo`, `calibrate`,
//! `report`. Every run is driven by one TOML configuration file plus the
//! global flags; outputs are CSV/JSON tables and a hashed manifest, byte
//! identical for a fixed (config, seed) pair.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 estimation
//! error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use liqrec::error::{Error, Result};

use commands::estimate::Which;
use commands::Ctx;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "liqrec", version, about = "Liquidity recycling simulation and estimation")]
struct Cli {
    /// TOML configuration file; omitted → built-in defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the run seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Cap the worker-thread count for bootstrap and Monte Carlo loops.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic panel, event catalog, and ground-truth sidecar.
    Simulate,
    /// Run one estimator and write its result tables.
    Estimate {
        #[arg(value_enum)]
        which: Which,
        /// Override the threshold command's bootstrap replication count.
        #[arg(long, value_name = "B")]
        bootstrap: Option<usize>,
    },
    /// Covariate-matched pseudo-event Monte Carlo inference.
    Placebo,
    /// Deterministic structural calibration tables.
    Calibrate,
    /// Full pipeline: every estimator plus the calibration and a summary.
    Report,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        Error::Data(_) | Error::Io(_) => 3,
        Error::Estimation(_) => 4,
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    }

    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::from_env()?,
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.paths.output_dir = out.clone();
    }

    let ctx = Ctx { seed: cfg.seed, out_dir: cfg.paths.output_dir.clone(), cfg };
    match cli.command {
        Command::Simulate => commands::simulate::run(&ctx),
        Command::Estimate { which, bootstrap } => commands::estimate::run(&ctx, which, bootstrap),
        Command::Placebo => commands::placebo::run(&ctx),
        Command::Calibrate => commands::calibrate::run(&ctx),
        Command::Report => commands::report::run(&ctx),
    }
}
