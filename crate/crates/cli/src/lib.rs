//! Command-line front end: configuration, image files, and the `denoise`,
//! `simulate`, `bounds` and `sweep` commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod image_io;
pub mod metrics;
pub mod phantom;
pub mod report;

use std::path::{Path, PathBuf};

pub use config::{Command, RunConfig};
pub use error::{CliError, CliResult};

/// Overrides given on the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Loads `config`, applies the overrides and runs `command`.
pub fn run(command: Command, config: &Path, overrides: &Overrides) -> CliResult<()> {
    let mut cfg = RunConfig::load(command, config)?;
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &overrides.out {
        cfg.output = out.clone();
    }
    run_config(&cfg)
}

pub fn run_config(cfg: &RunConfig) -> CliResult<()> {
    match cfg.command {
        Command::Denoise => commands::denoise::run(cfg).map(drop),
        Command::Simulate => commands::simulate::run(cfg).map(drop),
        Command::Bounds => commands::bounds::run(cfg).map(drop),
        Command::Sweep => commands::sweep::run(cfg).map(drop),
    }
}
