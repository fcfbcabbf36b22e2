//! `spectral-kinetics` command-line pipeline.

mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Command, Overrides, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] spectral_kinetics::Error),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{failed} of {total} cells failed")]
    Cells { failed: usize, total: usize, input: bool },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_input_error() => 2,
            CliError::Cells { input: true, .. } => 2,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "spectral-kinetics", version, about = "Correlation spectra, Langevin kinetics and bulk-edge signal detection")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Correlation spectrum, MP fits and bulk cutoff per beta
    Spectrum(Args),
    /// Langevin ensembles on every (beta, T/Tc) cell
    Simulate(Args),
    /// Closed Volterra theory, exponent fits and detection verdicts
    Analyze(Args),
    /// Synthetic price panels in the ingestion format
    Synth(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated beta grid
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    beta: Option<Vec<f64>>,
    /// Comma-separated temperatures as multiples of Tc
    #[arg(long = "temp-ratio", value_delimiter = ',')]
    temp_ratio: Option<Vec<f64>>,
    /// Comma-separated mode indices
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(command: Command, args: Args) -> Result<(), CliError> {
    let overrides =
        Overrides { betas: args.beta, temperature_ratios: args.temp_ratio, modes: args.modes, seed: args.seed, out_dir: args.out };
    let cfg = RunConfig::load(&args.config, &overrides, command)?;
    commands::dispatch(command, &cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Spectrum(a) => (Command::Spectrum, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Analyze(a) => (Command::Analyze, a),
        Cmd::Synth(a) => (Command::Synth, a),
    };
    match run(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
