//! Command-line pipeline: dataset simulation, event conversion, voxel
//! encoding, turbulence statistics, reconstruction, evaluation and slice
//! export.

pub mod commands;
pub mod config;
pub mod error;
pub mod input;
pub mod simulate;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::Config;
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "lfturb", version, about = "Event-based light-field turbulence toolkit")]
pub struct Cli {
    /// TOML file of configuration keys; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub keys: Config,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate a degraded multi-view event dataset from clean clips.
    Simulate,
    /// Convert a frame directory into an event stream.
    Events,
    /// Encode view streams into stacked voxel grids.
    Encode,
    /// Measure turbulence statistics from a dot-grid recording.
    Stats,
    /// Reconstruct and fuse views, scoring them against ground truth.
    Recon,
    /// Score reconstructed frames against ground truth.
    Eval,
    /// Export an x-t slice of a frame directory.
    Slice,
}

/// Runs `command` with `cfg` on a pool of `cfg.workers()` threads.
pub fn execute(command: Command, cfg: &Config) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers())
        .build()
        .map_err(|e| CliError::config(format!("worker pool: {e}")))?;
    pool.install(|| match command {
        Command::Simulate => simulate::cmd_simulate(cfg).map(drop),
        Command::Events => commands::cmd_events(cfg).map(drop),
        Command::Encode => commands::cmd_encode(cfg).map(drop),
        Command::Stats => commands::cmd_stats(cfg).map(drop),
        Command::Recon => commands::cmd_recon(cfg).map(drop),
        Command::Eval => commands::cmd_eval(cfg).map(drop),
        Command::Slice => commands::cmd_slice(cfg),
    })
}

/// Parses the configuration file and flags and runs the command.
pub fn run(cli: Cli) -> Result<()> {
    let cfg = config::load(cli.config.as_deref(), cli.keys)?;
    execute(cli.command, &cfg)
}
