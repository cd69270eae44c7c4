mod commands;
mod config;
mod error;
mod output;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::pipeline::Pipeline;

#[derive(Parser, Debug)]
#[command(name = "nilwave", version)]
#[command(about = "Continuous wavelet analysis on graded nilpotent Lie groups")]
struct Cli {
    /// JSON run configuration. Built-in defaults are used if omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding the `out` key of the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize the window and write `window.csv` and `window.meta.json`.
    Synthesize,
    /// Write `coefficients.csv` for an input field, or for the seeded test field.
    Analyze {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Write `reconstruction.csv` from a coefficients CSV.
    Reconstruct {
        #[arg(long)]
        input: PathBuf,
    },
    /// Run every configured check and write `verification.json`.
    Verify {
        /// Use the raw multiplier profile without normalizing it.
        #[arg(long)]
        skip_normalization: bool,
    },
    /// Fit decay exponents and write `decay.json` with plot CSVs.
    DecayReport,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config("--threads", e))?;
    }
    let cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let out = cli.out.clone().unwrap_or_else(|| cfg.out.clone());
    let skip = matches!(cli.command, Command::Verify { skip_normalization: true });
    let pipeline = match Pipeline::build(cfg, skip) {
        Err(CliError::Degenerate(msg)) if matches!(cli.command, Command::Verify { .. }) => {
            commands::write_degenerate(&out, &msg)?;
            return Err(CliError::Degenerate(msg));
        }
        other => other?,
    };
    match &cli.command {
        Command::Synthesize => commands::synthesize_window(&pipeline, &out),
        Command::Analyze { input } => commands::analyze_field(&pipeline, input.as_deref(), &out),
        Command::Reconstruct { input } => commands::reconstruct_field(&pipeline, input, &out),
        Command::Verify { .. } => commands::verify(&pipeline, &out),
        Command::DecayReport => commands::decay_report(&pipeline, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
