//! `eegprobe eval`: per-sample and per-subject accuracy of saved weights,
//! with an optional CSV of subject votes.

use std::path::Path;

use eegprobe::io::{fmt_f64, load_weights, write_csv};
use eegprobe::train::evaluate;

use super::{load_dataset_file, write_run_record};
use crate::config::Settings;
use crate::CliError;

#[derive(clap::Args)]
pub struct EvalArgs {
    /// Config file of key=value lines; command-line flags take precedence
    #[arg(long)]
    config: Option<String>,
    /// Weights file path
    #[arg(long)]
    weights: Option<String>,
    /// Dataset to evaluate on
    #[arg(long)]
    data: Option<String>,
    /// Optional CSV of per-subject majority votes
    #[arg(long)]
    out: Option<String>,
}

pub fn run(args: EvalArgs) -> Result<(), CliError> {
    let mut s = Settings::load(args.config.as_deref(), "eval")?;
    let weights_path = s.require::<String>("weights", args.weights)?;
    let data = s.require::<String>("data", args.data)?;
    let out = s.get_opt::<String>("out", args.out)?;
    let record = s.finish()?;

    let (model, weights) = load_weights(Path::new(&weights_path))?;
    let dataset = load_dataset_file(&data)?.into_labeled()?;
    let eval = evaluate(&model, &weights, &dataset)?;

    println!("sample_accuracy {}", fmt_f64(eval.sample_accuracy));
    println!("subject_accuracy {}", fmt_f64(eval.subject_accuracy));

    if let Some(out) = out {
        let rows: Vec<Vec<String>> = eval
            .subject_votes
            .iter()
            .map(|v| {
                vec![
                    v.subject_id.to_string(),
                    v.label.to_string(),
                    v.predicted.to_string(),
                ]
            })
            .collect();
        write_csv(Path::new(&out), &["subject_id", "label", "predicted"], &rows)?;
        write_run_record(&out, &record)?;
    }
    Ok(())
}
