use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    ValidateFbm,
    ValidateSmoothing,
    EstimateTime,
    Simulate,
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::ValidateFbm => "validate-fbm",
            Command::ValidateSmoothing => "validate-smoothing",
            Command::EstimateTime => "estimate-time",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
        }
    }
}

/// Stochastic Hardy-Henon heat equation experiments.
#[derive(Debug, Parser)]
#[command(name = "henon-spde", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,

    /// Overrides the `seed` key.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, default_value = "henon-out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let threads = std::env::var("HENON_SPDE_THREADS").ok();
    let code = henon_spde_cli::execute(cli.command.name(), &cli.config, cli.seed, &cli.out, threads);
    ExitCode::from(code as u8)
}
