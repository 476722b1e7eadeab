//! `lasso`: control synthesis, simulation and spectra for the wave equation
//! on a lasso graph, driven by a TOML config.

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Classify, Failure, DEFAULT_SEED};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "lasso", version, about = "Wave control on a lasso graph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize shape, velocity or exact controls for a target.
    Synthesize(Common),
    /// Simulate the controlled wave equation from rest.
    Simulate(Common),
    /// Eigenfrequencies and vertex traces of the Kirchhoff Laplacian.
    Spectrum(Common),
    /// Minimal spectral gaps and root clusters for the zero potential.
    Gap(Common),
    /// Random single-control trials showing the invisible modes.
    Demo(Common),
    /// Measure how close given controls steer to a target.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Grid nodes per unit length; overrides the config.
    #[arg(long, value_name = "N")]
    resolution: Option<usize>,
    /// Seed of the random trials; overrides the config.
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (Command::Synthesize(c) | Command::Simulate(c) | Command::Spectrum(c) | Command::Gap(c) | Command::Demo(c) | Command::Verify(c)) = &cli.command;
    let mut cfg = RunConfig::load(&c.config).config()?;
    if let Some(n) = c.resolution {
        if n == 0 {
            return Err(Failure::Config(anyhow::anyhow!("--resolution must be positive")));
        }
        cfg.grid.resolution = n;
    }
    let seed = c.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    std::fs::create_dir_all(&c.out).map_err(|e| anyhow::anyhow!("cannot create {}: {e}", c.out.display())).config()?;
    let out = c.out.as_path();
    match cli.command {
        Command::Synthesize(_) => commands::cmd_synthesize(&cfg, out),
        Command::Simulate(_) => commands::cmd_simulate(&cfg, out),
        Command::Spectrum(_) => commands::cmd_spectrum(&cfg, out),
        Command::Gap(_) => commands::cmd_gap(&cfg, out),
        Command::Demo(_) => commands::cmd_demo(&cfg, out, seed),
        Command::Verify(_) => commands::cmd_verify(&cfg, out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("lasso: {}", f.message());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
