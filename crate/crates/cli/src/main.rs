//! `oregonator` — simulate the diffusive Oregonator system and verify its
//! dissipativity certificates.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oregonator_cli::{
    exit_code_for, load_config, run_constants, run_dimension, run_simulate, run_verify, Overrides,
};

#[derive(Parser)]
#[command(name = "oregonator", version, about = "Oregonator spectral simulator and certificate engine")]
struct Cli {
    /// Configuration file (flat key = value format).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for run artifacts.
    #[arg(long, global = true, default_value = "oregonator-run")]
    out: PathBuf,

    /// Override the configured random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the time step.
    #[arg(long, global = true)]
    dt: Option<f64>,

    /// Override the simulation horizon.
    #[arg(long, global = true)]
    horizon: Option<f64>,

    /// Override the per-axis mode count (grid is set to twice the modes).
    #[arg(long, global = true)]
    modes: Option<usize>,

    /// Override the number of tangent directions for `dimension`.
    #[arg(long = "m-max", global = true)]
    m_max: Option<usize>,

    /// Use the corrected 1/gamma factor in N(R) (on, default) or the
    /// literal gamma factor (off).
    #[arg(long = "corrected-gamma", global = true, value_parser = parse_on_off)]
    corrected_gamma: Option<bool>,

    /// Parallel workers for `sweep`.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

fn parse_on_off(s: &str) -> Result<bool, String> {
    match s {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        _ => Err(format!("expected on or off, got `{s}`")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate and print every derived constant.
    Constants,
    /// Integrate one trajectory and export it.
    Simulate,
    /// Simulate and check every envelope and bound; exit 0 iff clean.
    Verify,
    /// Lyapunov spectrum, trace table, dimension bounds, growth certificate.
    Dimension,
    /// Run `verify` over a parameter grid, one summary row per point.
    Sweep {
        /// Grid, e.g. "F=1,2;b2=0.5,1".
        #[arg(long)]
        grid: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config_path) = cli.config.as_deref() else {
        eprintln!("error: --config PATH is required");
        return ExitCode::from(2);
    };
    let overrides = Overrides {
        seed: cli.seed,
        dt: cli.dt,
        horizon: cli.horizon,
        modes: cli.modes,
        m_max: cli.m_max,
        corrected_gamma: cli.corrected_gamma,
    };
    let (cfg, echo) = match load_config(config_path, &overrides) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    let result = match &cli.command {
        Command::Constants => run_constants(&cfg, &echo, &cli.out),
        Command::Simulate => run_simulate(&cfg, &echo, &cli.out),
        Command::Verify => run_verify(&cfg, &echo, &cli.out),
        Command::Dimension => run_dimension(&cfg, &echo, &cli.out).map(|d| d.outcome),
        Command::Sweep { grid } => oregonator_cli::sweep::parse_grid(grid)
            .and_then(|axes| oregonator_cli::sweep::run_sweep(&cfg, &echo, &cli.out, &axes, cli.jobs)),
    };

    match result {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
