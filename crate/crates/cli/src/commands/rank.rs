//! `eegprobe rank`: order samples or subjects by a neuron's activation,
//! optionally restricted to one classification outcome.

use std::path::Path;

use eegprobe::interpret::{rank_samples, rank_subjects, Outcome};
use eegprobe::io::{fmt_f64, load_weights, write_csv};

use super::{load_dataset_file, neuron_for, write_run_record};
use crate::config::Settings;
use crate::CliError;

#[derive(clap::Args)]
pub struct RankArgs {
    /// Config file of key=value lines; command-line flags take precedence
    #[arg(long)]
    config: Option<String>,
    /// Weights file path
    #[arg(long)]
    weights: Option<String>,
    /// Dataset to rank
    #[arg(long)]
    data: Option<String>,
    /// Neuron as LAYER:UNIT
    #[arg(long)]
    neuron: Option<String>,
    /// Keep only TP, TN, FP, or FN samples
    #[arg(long)]
    outcome: Option<String>,
    /// Aggregate activation per subject instead of per sample
    #[arg(long)]
    per_subject: bool,
    /// Keep only the top K rows
    #[arg(short = 'k', long)]
    top: Option<usize>,
    /// Output CSV path
    #[arg(long)]
    out: Option<String>,
}

pub fn run(args: RankArgs) -> Result<(), CliError> {
    let mut s = Settings::load(args.config.as_deref(), "rank")?;
    let weights_path = s.require::<String>("weights", args.weights)?;
    let data = s.require::<String>("data", args.data)?;
    let neuron = s.require::<String>("neuron", args.neuron)?;
    let outcome = s.get_opt::<String>("outcome", args.outcome)?;
    let per_subject = s.get_flag("per_subject", args.per_subject)?;
    let top = s.get_opt::<usize>("top", args.top)?;
    let out = s.require::<String>("out", args.out)?;
    let record = s.finish()?;

    let selector = neuron_for(&neuron)?;
    let outcome_filter: Option<Outcome> = match outcome {
        Some(text) => Some(text.parse().map_err(|e| CliError::Usage(format!("{e}")))?),
        None => None,
    };
    let (model, weights) = load_weights(Path::new(&weights_path))?;
    let dataset = load_dataset_file(&data)?.into_labeled()?;

    let rows: Vec<Vec<String>>;
    let header: &[&str];
    if per_subject {
        let k = top.unwrap_or(usize::MAX);
        let ranked = rank_subjects(&model, &weights, &dataset, selector, outcome_filter, k)?;
        header = &["rank", "subject_id", "total_score", "sample_count"];
        rows = ranked
            .iter()
            .enumerate()
            .map(|(i, r)| {
                vec![
                    (i + 1).to_string(),
                    r.subject_id.to_string(),
                    fmt_f64(r.total),
                    r.sample_count.to_string(),
                ]
            })
            .collect();
    } else {
        let mut ranked = rank_samples(&model, &weights, &dataset, selector, outcome_filter)?;
        if let Some(k) = top {
            ranked.truncate(k);
        }
        header = &["rank", "sample_index", "subject_id", "outcome", "score"];
        rows = ranked
            .iter()
            .enumerate()
            .map(|(i, r)| {
                vec![
                    (i + 1).to_string(),
                    r.index.to_string(),
                    r.subject_id.to_string(),
                    r.outcome.to_string(),
                    fmt_f64(r.score),
                ]
            })
            .collect();
    }

    write_csv(Path::new(&out), header, &rows)?;
    write_run_record(&out, &record)?;
    println!("wrote {} rows to {out}", rows.len());
    Ok(())
}
