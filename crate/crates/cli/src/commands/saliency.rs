//! `eegprobe saliency`: absolute input gradient of one neuron for one
//! sample, plus a copy of the sample with its low-saliency cells replaced
//! by interpolation.

use std::path::Path;

use eegprobe::interpret::{saliency_mask, SaliencyMap};
use eegprobe::io::{load_weights, save_dataset, DatasetFile, UNLABELED};
use eegprobe::nn::input_gradient;
use eegprobe::Error;

use super::{load_dataset_file, neuron_for, write_run_record};
use crate::config::Settings;
use crate::CliError;

#[derive(clap::Args)]
pub struct SaliencyArgs {
    /// Config file of key=value lines; command-line flags take precedence
    #[arg(long)]
    config: Option<String>,
    /// Weights file path
    #[arg(long)]
    weights: Option<String>,
    /// Dataset holding the sample
    #[arg(long)]
    data: Option<String>,
    /// Sample index in the dataset
    #[arg(long)]
    sample: Option<usize>,
    /// Neuron as LAYER:UNIT
    #[arg(long)]
    neuron: Option<String>,
    /// Saliency quantile below which cells are replaced
    #[arg(long)]
    quantile: Option<f64>,
    /// Output path for the saliency map
    #[arg(long)]
    map: Option<String>,
    /// Output path for the masked sample
    #[arg(long)]
    masked: Option<String>,
}

pub fn run(args: SaliencyArgs) -> Result<(), CliError> {
    let mut s = Settings::load(args.config.as_deref(), "saliency")?;
    let weights_path = s.require::<String>("weights", args.weights)?;
    let data = s.require::<String>("data", args.data)?;
    let sample = s.require::<usize>("sample", args.sample)?;
    let neuron = s.require::<String>("neuron", args.neuron)?;
    let quantile = s.get("quantile", args.quantile, 0.30f64)?;
    let map_path = s.require::<String>("map", args.map)?;
    let masked_path = s.require::<String>("masked", args.masked)?;
    let record = s.finish()?;

    let selector = neuron_for(&neuron)?;
    let (model, weights) = load_weights(Path::new(&weights_path))?;
    let file = load_dataset_file(&data)?;
    let record_in = file.records.get(sample).ok_or_else(|| {
        CliError::Fail(Error::InvalidDataset(format!(
            "sample {sample} out of range for {} records",
            file.records.len()
        )))
    })?;

    let grad = input_gradient(&model, &weights, &record_in.data, selector)?;
    let map = SaliencyMap {
        values: grad.map(f64::abs),
    };
    let masked = saliency_mask(&record_in.data, &map, quantile)?;
    if !masked.untouched_channels.is_empty() {
        println!(
            "channels left untouched (saliency entirely below the threshold): {:?}",
            masked.untouched_channels
        );
    }

    let mut map_file = DatasetFile::new(file.channels, file.time, file.fs);
    map_file.push(record_in.subject_id, UNLABELED, map.values)?;
    save_dataset(Path::new(&map_path), &map_file)?;

    let mut masked_file = DatasetFile::new(file.channels, file.time, file.fs);
    masked_file.push(record_in.subject_id, record_in.label, masked.masked)?;
    save_dataset(Path::new(&masked_path), &masked_file)?;

    write_run_record(&map_path, &record)?;
    println!("wrote saliency map to {map_path} and masked sample to {masked_path}");
    Ok(())
}
