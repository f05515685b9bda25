//! `eegprobe am`: repeated seeded activation maximization runs for one
//! neuron, saved as a dataset of syntheses plus a per-run activation CSV.

use std::path::Path;

use eegprobe::interpret::{activation_maximize, neuron_activation, AMConfig};
use eegprobe::io::{fmt_f64, load_weights, save_dataset, write_csv, DatasetFile, UNLABELED};
use eegprobe::seeds;

use super::{neuron_for, write_run_record};
use crate::config::Settings;
use crate::CliError;

#[derive(clap::Args)]
pub struct AmArgs {
    /// Config file of key=value lines; command-line flags take precedence
    #[arg(long)]
    config: Option<String>,
    /// Weights file path
    #[arg(long)]
    weights: Option<String>,
    /// Neuron as LAYER:UNIT
    #[arg(long)]
    neuron: Option<String>,
    /// Number of independently seeded runs
    #[arg(long)]
    runs: Option<usize>,
    /// Base seed; run r uses a seed derived from (base, r)
    #[arg(long)]
    seed: Option<u64>,
    /// Sampling rate recorded in the output file header
    #[arg(long)]
    fs: Option<f64>,
    /// Gradient ascent step size
    #[arg(long)]
    step: Option<f64>,
    /// Ascent iterations per run
    #[arg(long)]
    iters: Option<usize>,
    /// Maximum circular time shift per iteration
    #[arg(long)]
    jitter: Option<usize>,
    /// Total variation penalty weight
    #[arg(long)]
    tv: Option<f64>,
    /// L1 penalty weight
    #[arg(long)]
    l1: Option<f64>,
    /// Uniform init amplitude
    #[arg(long)]
    init_scale: Option<f64>,
    /// Output dataset of syntheses
    #[arg(long)]
    out: Option<String>,
    /// Per-run activation CSV (default: <out>.activations.csv)
    #[arg(long)]
    activations: Option<String>,
}

pub fn run(args: AmArgs) -> Result<(), CliError> {
    let defaults = AMConfig::default();
    let mut s = Settings::load(args.config.as_deref(), "am")?;
    let weights_path = s.require::<String>("weights", args.weights)?;
    let neuron = s.require::<String>("neuron", args.neuron)?;
    let runs = s.get("runs", args.runs, 20usize)?;
    let seed = s.get("seed", args.seed, 0u64)?;
    let fs = s.get("fs", args.fs, 128.0f64)?;
    let out = s.require::<String>("out", args.out)?;
    let activations_path = s.get(
        "activations",
        args.activations,
        format!("{out}.activations.csv"),
    )?;
    let base = AMConfig {
        step_size: s.get("step", args.step, defaults.step_size)?,
        iterations: s.get("iters", args.iters, defaults.iterations)?,
        jitter_max: s.get("jitter", args.jitter, defaults.jitter_max)?,
        tv_weight: s.get("tv", args.tv, defaults.tv_weight)?,
        l1_weight: s.get("l1", args.l1, defaults.l1_weight)?,
        init_scale: s.get("init_scale", args.init_scale, defaults.init_scale)?,
        rng_seed: 0,
    };
    let record = s.finish()?;

    if runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let selector = neuron_for(&neuron)?;
    let (model, weights) = load_weights(Path::new(&weights_path))?;
    let [channels, time] = model.input_shape;

    let mut file = DatasetFile::new(channels, time, fs);
    let mut rows = Vec::with_capacity(runs);
    for run in 0..runs {
        let run_seed = seeds::derive(seed, run as u64);
        let config = AMConfig {
            rng_seed: run_seed,
            ..base
        };
        let (synthesis, _) = activation_maximize(&model, &weights, selector, &config)?;
        let activation = neuron_activation(&model, &weights, &synthesis, selector)?;
        rows.push(vec![
            run.to_string(),
            run_seed.to_string(),
            fmt_f64(activation),
        ]);
        file.push(run as u32, UNLABELED, synthesis)?;
    }

    save_dataset(Path::new(&out), &file)?;
    write_csv(
        Path::new(&activations_path),
        &["run", "seed", "activation"],
        &rows,
    )?;
    write_run_record(&out, &record)?;
    println!("synthesized {runs} inputs for neuron {neuron} to {out}");
    Ok(())
}
