use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use varexp::{run, Command, Format, Invocation};

#[derive(Parser)]
#[command(name = "varexp", version, about = "Simulation, bounds and smiles for dX = mu X dt + sigma X^p(X) dW")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Extra output format; CSV is always written.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Check every exponent against (p1)-(p3) and estimate growth constants.
    CheckExponent,
    /// Analytical error bounds for each (lambda, R) case.
    BoundTable,
    /// Coupled strong error of every model against the first.
    StrongError,
    /// Sample paths, terminal histograms and summaries.
    Simulate,
    /// Monte-Carlo implied-volatility smile per model.
    Smile,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config) = cli.config else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(2);
    };
    let command = match cli.command {
        Cmd::CheckExponent => Command::CheckExponent,
        Cmd::BoundTable => Command::BoundTable,
        Cmd::StrongError => Command::StrongError,
        Cmd::Simulate => Command::Simulate,
        Cmd::Smile => Command::Smile,
    };
    let inv = Invocation {
        command,
        config,
        out: cli.out,
        seed: cli.seed,
        format: cli.format,
    };
    match run(&inv) {
        Ok(outcome) => {
            for m in &outcome.messages {
                eprintln!("{m}");
            }
            for f in &outcome.files {
                println!("{}", outcome.out_dir.join(f).display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
