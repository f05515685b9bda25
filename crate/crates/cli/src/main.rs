//! `eegprobe`: generate synthetic EEG-like datasets, train a small CNN
//! classifier, and inspect what it learned through activation ranking,
//! input synthesis, deconvolution, saliency masking, and spectral reports.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Failure split by exit code: usage problems exit 2, everything that goes
/// wrong during computation or file handling exits 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Fail(eegprobe::Error),
}

impl From<eegprobe::Error> for CliError {
    fn from(e: eegprobe::Error) -> Self {
        CliError::Fail(e)
    }
}

#[derive(Parser)]
#[command(name = "eegprobe", version, about = "Train and inspect small EEG classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic dataset with planted band features
    Synth(commands::synth::SynthArgs),
    /// Train a classifier and record its loss history
    Train(commands::train::TrainArgs),
    /// Evaluate saved weights on a dataset
    Eval(commands::eval::EvalArgs),
    /// Rank samples or subjects by a neuron's activation
    Rank(commands::rank::RankArgs),
    /// Synthesize inputs that maximize a neuron's activation
    Am(commands::am::AmArgs),
    /// Reconstruct a filter's view of one sample through unpooling
    Deconv(commands::deconv::DeconvArgs),
    /// Compute a saliency map and a saliency-masked copy of one sample
    Saliency(commands::saliency::SaliencyArgs),
    /// Welch spectra with group means, confidence bands, and differences
    Psd(commands::psd::PsdArgs),
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("EEGPROBE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| {
            CliError::Usage(format!(
                "EEGPROBE_THREADS must be a positive integer, got {raw:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Fail(eegprobe::Error::InvalidConfig(e.to_string())))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(args) => commands::synth::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Rank(args) => commands::rank::run(args),
        Command::Am(args) => commands::am::run(args),
        Command::Deconv(args) => commands::deconv::run(args),
        Command::Saliency(args) => commands::saliency::run(args),
        Command::Psd(args) => commands::psd::run(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = init_threads().and_then(|()| run(cli));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            eprintln!("usage error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Fail(error)) => {
            eprintln!("error: {error}");
            ExitCode::from(1)
        }
    }
}
