//! Command-line driver for the non-conforming DG acoustics solver.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical blow-up.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ncdg::config::{RunConfig, Scenario};
use ncdg::error::Error;
use ncdg::scenarios::{default_config, run};

#[derive(Parser)]
#[command(name = "ncdg", about = "Nodal DG solver for the acoustic conservation equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (TOML); defaults to the scenario's built-in config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. --override degree=4 or
    /// --override mesh.h_outer=0.01 (repeatable).
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration file through its scenario driver.
    Solve {
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Spatial convergence study on the embedded-rectangle membrane.
    MembraneConvergence(Common),
    /// Energy stability comparison of both couplings on the 13/7 interface.
    Instability(Common),
    /// Overlap and overset variants of the embedded polygonal disc.
    Overlap(Common),
    /// Pressure pulse through heterogeneous fluids with an NCI mesh.
    Heterogeneous(Common),
    /// Mortaring on a matched interface against a fully conforming run.
    ConformingCheck(Common),
}

fn load(scenario: Scenario, common: &Common) -> ncdg::Result<RunConfig> {
    let base = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => default_config(scenario),
    };
    base.with_overrides(&common.overrides)
}

fn dispatch(cli: Cli) -> ncdg::Result<()> {
    let cfg = match &cli.command {
        Command::Solve { config, overrides } => {
            RunConfig::from_file(config)?.with_overrides(overrides)?
        }
        Command::MembraneConvergence(c) => load(Scenario::MembraneConvergence, c)?,
        Command::Instability(c) => load(Scenario::Instability, c)?,
        Command::Overlap(c) => load(Scenario::Overlap, c)?,
        Command::Heterogeneous(c) => load(Scenario::Heterogeneous, c)?,
        Command::ConformingCheck(c) => load(Scenario::ConformingCheck, c)?,
    };
    if cfg.threads > 1 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    }
    log::info!("running scenario {:?} into {}", cfg.scenario, cfg.output_dir.display());
    run(&cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e @ Error::BlowUp { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
