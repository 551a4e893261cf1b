use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stripefree_cli::{Command, Overrides};

#[derive(Parser)]
#[command(name = "stripefree", version, about = "Removal of stationary noise from images")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Remove a bank of stationary noises from an image
    Denoise(Args),
    /// Generate a noisy image with known ground truth
    Simulate(Args),
    /// Tabulate the Gaussianity and operator-norm bounds
    Bounds(Args),
    /// Solve over a range of weights and compare with the bounds
    Sweep(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Configuration file
    #[arg(long)]
    config: PathBuf,
    /// Seed overriding the configuration
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory overriding the configuration
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (command, args) = match cli.command {
        Sub::Denoise(a) => (Command::Denoise, a),
        Sub::Simulate(a) => (Command::Simulate, a),
        Sub::Bounds(a) => (Command::Bounds, a),
        Sub::Sweep(a) => (Command::Sweep, a),
    };
    let overrides = Overrides {
        seed: args.seed,
        out: args.out,
    };
    match stripefree_cli::run(command, &args.config, &overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stripefree {command}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
