//! `eegprobe train`: fit a classifier on a dataset file and write the
//! weights plus a per-epoch history CSV.

use std::path::Path;

use eegprobe::io::{fmt_f64, save_weights, write_csv};
use eegprobe::nn::{LayerSpec, ModelSpec};
use eegprobe::train::{train, TrainConfig};

use super::{load_dataset_file, write_run_record};
use crate::config::Settings;
use crate::CliError;

#[derive(clap::Args)]
pub struct TrainArgs {
    /// Config file of key=value lines; command-line flags take precedence
    #[arg(long)]
    config: Option<String>,
    /// Input dataset path
    #[arg(long)]
    data: Option<String>,
    /// Output weights path
    #[arg(long)]
    out: Option<String>,
    /// History CSV path (default: <out>.history.csv)
    #[arg(long)]
    history: Option<String>,
    /// Model architecture: compact or reference
    #[arg(long)]
    arch: Option<String>,
    /// Adamax learning rate
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Rate applied to every dropout layer in the built model
    #[arg(long)]
    dropout: Option<f64>,
    /// Seed for init, shuffling, and dropout masks
    #[arg(long)]
    seed: Option<u64>,
    /// Fraction of subjects held out for validation
    #[arg(long)]
    val_fraction: Option<f64>,
    /// Seed for the validation split
    #[arg(long)]
    split_seed: Option<u64>,
    /// Stop after this many epochs without validation improvement
    #[arg(long)]
    patience: Option<usize>,
}

pub fn run(args: TrainArgs) -> Result<(), CliError> {
    let defaults = TrainConfig::default();
    let mut s = Settings::load(args.config.as_deref(), "train")?;
    let data = s.require::<String>("data", args.data)?;
    let out = s.require::<String>("out", args.out)?;
    let history_path = s.get("history", args.history, format!("{out}.history.csv"))?;
    let arch = s.get("arch", args.arch, "compact".to_string())?;
    let config = TrainConfig {
        learning_rate: s.get("lr", args.lr, defaults.learning_rate)?,
        batch_size: s.get("batch_size", args.batch_size, defaults.batch_size)?,
        epochs: s.get("epochs", args.epochs, defaults.epochs)?,
        weight_decay: s.get("weight_decay", args.weight_decay, defaults.weight_decay)?,
        dropout_rate: s.get("dropout", args.dropout, defaults.dropout_rate)?,
        rng_seed: s.get("seed", args.seed, defaults.rng_seed)?,
        patience: s.get_opt("patience", args.patience)?,
        ..defaults
    };
    let val_fraction = s.get_opt("val_fraction", args.val_fraction)?;
    let split_seed = s.get("split_seed", args.split_seed, 0u64)?;
    let record = s.finish()?;

    let file = load_dataset_file(&data)?;
    let mut model = match arch.as_str() {
        "compact" => ModelSpec::compact(file.channels, file.time),
        "reference" => ModelSpec::reference(file.channels, file.time),
        other => {
            return Err(CliError::Usage(format!(
                "unknown architecture {other:?}; expected compact or reference"
            )))
        }
    };
    for layer in &mut model.layers {
        if let LayerSpec::Dropout { rate } = layer {
            *rate = config.dropout_rate;
        }
    }

    let dataset = file.into_labeled()?;
    let (weights, history) = match val_fraction {
        Some(fraction) => {
            let (train_set, val_set) = dataset.split_by_subject(fraction, split_seed)?;
            train(&model, &train_set, Some(&val_set), &config)?
        }
        None => train(&model, &dataset, None, &config)?,
    };

    save_weights(Path::new(&out), &model, &weights)?;
    let rows: Vec<Vec<String>> = history
        .iter()
        .map(|e| {
            vec![
                e.epoch.to_string(),
                fmt_f64(e.mean_loss),
                fmt_f64(e.train_accuracy),
                e.val_accuracy.map(fmt_f64).unwrap_or_default(),
            ]
        })
        .collect();
    write_csv(
        Path::new(&history_path),
        &["epoch", "mean_loss", "train_accuracy", "val_accuracy"],
        &rows,
    )?;
    write_run_record(&out, &record)?;

    let last = history.last().expect("training runs at least one epoch");
    println!(
        "trained {} epochs: loss {}, train accuracy {}",
        history.len(),
        fmt_f64(last.mean_loss),
        fmt_f64(last.train_accuracy)
    );
    Ok(())
}
