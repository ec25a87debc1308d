//! `berrygate` command-line driver.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "berrygate", version, about = "Simulate and analyse ultrafast Berry-phase gates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(clap::Args, Debug, Clone)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Override spontaneous decay.
    #[arg(long, value_enum)]
    pub decay: Option<Switch>,
    /// Validate the configuration and print the resolved scenario.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Single chirped pulse: population transfer and trajectory.
    Rap(Common),
    /// Two-pulse gate: extracted operator, fidelity, optional Bloch paths.
    Gate(Common),
    /// Two gates separated by a scanned delay, with a fringe fit.
    Ramsey(Common),
    /// Parameter sweep from the config or a named preset.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// One of figS1a, figS1b, figS1c, figS1d.
        #[arg(long)]
        preset: Option<String>,
        /// Points per continuous preset axis.
        #[arg(long)]
        grid: Option<usize>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Fit fringe or Ramsey data from a CSV file.
    Fit {
        /// Two-column CSV: x, probability.
        data: PathBuf,
        #[arg(long, value_enum)]
        model: commands::FitModel,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write the fit JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
