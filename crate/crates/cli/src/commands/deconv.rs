//! `eegprobe deconv`: project conv filter activity for one sample back to
//! the input through transposed convolutions and switch unpooling.

use std::path::Path;

use eegprobe::interpret::deconvnet_reconstruct;
use eegprobe::io::{load_weights, save_dataset, DatasetFile, UNLABELED};
use eegprobe::nn::{forward, LayerSpec, NeuronSelector};
use eegprobe::Error;

use super::{load_dataset_file, write_run_record};
use crate::config::Settings;
use crate::CliError;

#[derive(clap::Args)]
pub struct DeconvArgs {
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
    /// Conv layer index
    #[arg(long)]
    layer: Option<usize>,
    /// Single filter to reconstruct
    #[arg(long)]
    filter: Option<usize>,
    /// Reconstruct every filter of the layer
    #[arg(long)]
    all: bool,
    /// Output dataset of reconstructions, one record per filter
    #[arg(long)]
    out: Option<String>,
}

pub fn run(args: DeconvArgs) -> Result<(), CliError> {
    let mut s = Settings::load(args.config.as_deref(), "deconv")?;
    let weights_path = s.require::<String>("weights", args.weights)?;
    let data = s.require::<String>("data", args.data)?;
    let sample = s.require::<usize>("sample", args.sample)?;
    let layer = s.require::<usize>("layer", args.layer)?;
    let filter = s.get_opt::<usize>("filter", args.filter)?;
    let all = s.get_flag("all", args.all)?;
    let out = s.require::<String>("out", args.out)?;
    let record = s.finish()?;

    if all == filter.is_some() {
        return Err(CliError::Usage(
            "pass exactly one of --filter and --all".into(),
        ));
    }

    let (model, weights) = load_weights(Path::new(&weights_path))?;
    let file = load_dataset_file(&data)?;
    let input = &file
        .records
        .get(sample)
        .ok_or_else(|| {
            CliError::Fail(Error::InvalidDataset(format!(
                "sample {sample} out of range for {} records",
                file.records.len()
            )))
        })?
        .data;

    let filters = match model.layers.get(layer) {
        Some(LayerSpec::Conv { filters, .. }) => *filters,
        _ => {
            return Err(CliError::Fail(Error::InvalidSelector(format!(
                "layer {layer} is not a convolution layer"
            ))))
        }
    };
    let chosen: Vec<usize> = match filter {
        Some(f) => vec![f],
        None => (0..filters).collect(),
    };

    let (_, _, trace) = forward(&model, &weights, input, true)?;
    let trace = trace.expect("trace requested");

    let mut out_file = DatasetFile::new(file.channels, file.time, file.fs);
    for &f in &chosen {
        let selector = NeuronSelector::new(layer, f);
        let reconstruction = deconvnet_reconstruct(&model, &weights, &trace, selector)?;
        if reconstruction.data().iter().all(|v| *v == 0.0) {
            println!("filter {f}: reconstruction is identically zero");
        }
        out_file.push(f as u32, UNLABELED, reconstruction)?;
    }

    save_dataset(Path::new(&out), &out_file)?;
    write_run_record(&out, &record)?;
    println!(
        "wrote {} reconstruction(s) of sample {sample} to {out}",
        chosen.len()
    );
    Ok(())
}
