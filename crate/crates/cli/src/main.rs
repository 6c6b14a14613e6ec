use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use invfilter_cli::{commands, CliError};

/// Barrier and priority-ladder safety filters driven by JSON scenarios.
#[derive(Debug, Parser)]
#[command(name = "invfilter", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario and write trajectory.csv and report.txt.
    Run {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the barrier set with its priority-form reduction.
    CheckEquivalence {
        file: PathBuf,
        /// Approximate number of (state, control) pairs.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the sampling validity checkers.
    Validate { file: PathBuf },
}

fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("INVFILTER_LOG", "error"))
        .format_timestamp(None)
        .init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let (file, result) = match &cli.command {
        Command::Run { file, out } => (file, commands::run(file, out)),
        Command::CheckEquivalence { file, samples, out } => (file, commands::check_equivalence(file, *samples, out)),
        Command::Validate { file } => (file, commands::validate(file)),
    };
    match result {
        Ok(outcome) => ExitCode::from(outcome.exit_code()),
        Err(e) => {
            match &e {
                CliError::Parse { .. } => eprintln!("error: {}: parse error at {e}", file.display()),
                _ => eprintln!("error: {}: {e}", file.display()),
            }
            ExitCode::from(e.exit_code())
        }
    }
}
