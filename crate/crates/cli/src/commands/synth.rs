//! `eegprobe synth`: generate a labeled dataset and save it with its
//! sampling rate.

use std::path::Path;

use eegprobe::io::{save_dataset, DatasetFile};
use eegprobe::synth::{generate, SynthSpec};

use super::write_run_record;
use crate::config::Settings;
use crate::CliError;

#[derive(clap::Args)]
pub struct SynthArgs {
    /// Config file of key=value lines; command-line flags take precedence
    #[arg(long)]
    config: Option<String>,
    /// Base seed for subject, noise, and frequency draws
    #[arg(long)]
    seed: Option<u64>,
    /// Subjects per class
    #[arg(long)]
    subjects: Option<usize>,
    /// Samples per subject
    #[arg(long)]
    samples: Option<usize>,
    /// Channel count
    #[arg(long)]
    channels: Option<usize>,
    /// Samples per channel
    #[arg(long)]
    time: Option<usize>,
    /// Sampling rate in Hz
    #[arg(long)]
    fs: Option<f64>,
    /// Background noise spectral slope exponent
    #[arg(long)]
    alpha: Option<f64>,
    /// Output dataset path
    #[arg(long)]
    out: Option<String>,
}

pub fn run(args: SynthArgs) -> Result<(), CliError> {
    let mut s = Settings::load(args.config.as_deref(), "synth")?;
    let seed = s.get("seed", args.seed, 0u64)?;
    let subjects = s.get("subjects", args.subjects, 10usize)?;
    let samples = s.get("samples", args.samples, 40usize)?;
    let channels = s.get("channels", args.channels, 24usize)?;
    let time = s.get("time", args.time, 256usize)?;
    let fs = s.get("fs", args.fs, 128.0f64)?;
    let alpha = s.get("alpha", args.alpha, 1.0f64)?;
    let out = s.require::<String>("out", args.out)?;
    let record = s.finish()?;

    let mut spec = SynthSpec::new(subjects, seed);
    spec.samples_per_subject = samples;
    spec.time = time;
    spec.fs = fs;
    spec.alpha = alpha;
    if channels != spec.channels {
        spec.channels = channels;
        let half = channels / 2;
        let front = |c: usize| if c < half { 1.0 } else { 0.2 };
        spec.class_components[0][0].channel_weights = (0..channels).map(front).collect();
        spec.class_components[1][0].channel_weights =
            (0..channels).map(|c| front(channels - 1 - c)).collect();
    }

    let dataset = generate(&spec)?;
    let file = DatasetFile::from_labeled(&dataset, fs)?;
    save_dataset(Path::new(&out), &file)?;
    write_run_record(&out, &record)?;
    println!(
        "wrote {} samples ({channels} x {time} @ {fs} Hz) to {out}",
        file.records.len()
    );
    Ok(())
}
