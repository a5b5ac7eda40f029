use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand as ClapSubcommand};
use gfou_cli::{run, ExperimentConfig, RunError, Subcommand};

/// Fractional Ornstein-Uhlenbeck Dirichlet solver and Gaussian
/// symmetrization toolkit.
#[derive(Parser)]
#[command(name = "gfou", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration file (flat key = value).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV/report artifacts.
    #[arg(long, default_value = "gfou-out", global = true)]
    out: PathBuf,

    /// Seed for datum families; fixed seed means byte-identical output.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Grid resolution override.
    #[arg(long, global = true)]
    resolution: Option<usize>,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Solve (-Δ + x·∇)^s u = f and export the solution field.
    Solve,
    /// Export the extension field w(x, y) on a ladder of heights.
    Extend,
    /// Export the decreasing rearrangement of the datum.
    Rearrange,
    /// Run the concentration-comparison experiment against the
    /// symmetrized half-space problem.
    Compare,
    /// Empirical regularity constants over a seeded datum family.
    Regularity,
    /// Tabulate kernel rows (half-space Green's function split or Mehler).
    Kernel,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = match cli.command {
        Command::Solve => Subcommand::Solve,
        Command::Extend => Subcommand::Extend,
        Command::Rearrange => Subcommand::Rearrange,
        Command::Compare => Subcommand::Compare,
        Command::Regularity => Subcommand::Regularity,
        Command::Kernel => Subcommand::Kernel,
    };
    let mut cfg = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match ExperimentConfig::parse(&text) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("gfou: {e}");
                    return ExitCode::from(gfou_cli::exit_code::CONFIG as u8);
                }
            },
            Err(e) => {
                eprintln!("gfou: cannot read {}: {e}", path.display());
                return ExitCode::from(gfou_cli::exit_code::CONFIG as u8);
            }
        },
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(resolution) = cli.resolution {
        cfg.resolution = resolution;
    }
    match run(cmd, &cfg, &cli.out) {
        Ok(code) => {
            println!(
                "gfou {}: artifacts in {} (exit {code})",
                cmd.name(),
                cli.out.display()
            );
            ExitCode::from(code as u8)
        }
        Err(RunError { exit, message }) => {
            eprintln!("gfou {}: {message}", cmd.name());
            ExitCode::from(exit as u8)
        }
    }
}
