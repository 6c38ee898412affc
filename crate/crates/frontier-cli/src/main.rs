//! `frontier`: validate configs, run backtests and preference sweeps, and
//! recompute Pareto frontiers from stored sweep points.

mod commands;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "frontier", version, about = "Portfolio strategy research engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// Run configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Strategy families, comma separated
    /// (ew, spo, mpo, frontier-log-returns, frontier-forecast-only,
    /// frontier-all-inputs).
    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<String>>,
    /// Number of seeds (0..N) for stochastic strategies.
    #[arg(long)]
    seeds: Option<u64>,
    /// Concurrent sweep tasks; 0 means one per core.
    #[arg(long)]
    jobs: Option<usize>,
    /// Preference grid preset: `full` (21x24) or `small` (7x6).
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the configuration and data alignment without running anything.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Backtest each selected family at one preference point.
    Backtest {
        #[command(flatten)]
        common: CommonArgs,
        /// Risk-aversion multiplier for the backtest.
        #[arg(long, default_value_t = 1.0)]
        gamma_risk: f64,
        /// Trade-aversion multiplier for the backtest.
        #[arg(long, default_value_t = 1.0)]
        gamma_trade: f64,
        /// Seed for forecast noise and policy training.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the investor-preference sweep and emit frontier files.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Recompute Pareto and mean frontiers from stored sweep points.
    Frontier {
        /// Points CSV files produced by `sweep`.
        #[arg(long, required = true, value_delimiter = ',')]
        points: Vec<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome: Result<ExitCode> = match cli.command {
        Command::Validate { common } => commands::validate(&common),
        Command::Backtest { common, gamma_risk, gamma_trade, seed } => {
            commands::backtest(&common, gamma_risk, gamma_trade, seed)
        }
        Command::Sweep { common } => commands::sweep(&common),
        Command::Frontier { points, out } => commands::frontier(&points, &out),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
