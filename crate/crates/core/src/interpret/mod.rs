//! Visualization methods for a trained classifier: activation-based sample
//! and subject ranking, activation maximization, deconvnet reconstruction,
//! and gradient saliency with quantile masking.

pub mod am;
pub mod deconv;
pub mod saliency;

pub use am::{activation_maximize, l1_norm, total_variation, AMConfig};
pub use deconv::{deconv_transpose, deconvnet_reconstruct};
pub use saliency::{saliency, saliency_mask, MaskedSample, SaliencyMap};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nn::{forward, ModelSpec, NeuronSelector, Weights};
use crate::train::{evaluate, LabeledDataset};

/// Classification outcome of one sample; class 1 is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Tp,
    Tn,
    Fp,
    Fn,
}

impl Outcome {
    pub fn of(label: u8, predicted: u8) -> Self {
        match (label, predicted) {
            (1, 1) => Outcome::Tp,
            (0, 0) => Outcome::Tn,
            (0, _) => Outcome::Fp,
            (_, _) => Outcome::Fn,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Tp => "TP",
            Outcome::Tn => "TN",
            Outcome::Fp => "FP",
            Outcome::Fn => "FN",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "TP" => Ok(Outcome::Tp),
            "TN" => Ok(Outcome::Tn),
            "FP" => Ok(Outcome::Fp),
            "FN" => Ok(Outcome::Fn),
            other => Err(Error::InvalidConfig(format!(
                "unknown outcome {other:?}; expected TP, TN, FP, or FN"
            ))),
        }
    }
}

/// One ranked sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedSample {
    pub index: usize,
    pub subject_id: u32,
    pub outcome: Outcome,
    pub score: f64,
}

/// One ranked subject with its summed activation.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedSubject {
    pub subject_id: u32,
    pub total: f64,
    pub sample_count: usize,
}

/// The selected unit's activation for one input: a conv filter's feature map
/// summed, or a scalar unit's value. Classification units are pre-softmax.
pub fn neuron_activation(
    spec: &ModelSpec,
    weights: &Weights,
    input: &crate::Tensor,
    selector: NeuronSelector,
) -> Result<f64> {
    selector.validate(spec)?;
    let (_, _, trace) = forward(spec, weights, input, true)?;
    let trace = trace.expect("trace requested");
    let out = &trace.outputs[selector.layer];
    Ok(if out.shape().len() == 3 {
        out.plane(selector.unit).iter().sum()
    } else {
        out.data()[selector.unit]
    })
}

/// Samples sorted by the selector's activation, descending, optionally
/// restricted to one classification outcome. Equal scores keep dataset order.
pub fn rank_samples(
    spec: &ModelSpec,
    weights: &Weights,
    dataset: &LabeledDataset,
    selector: NeuronSelector,
    outcome_filter: Option<Outcome>,
) -> Result<Vec<RankedSample>> {
    if dataset.is_empty() {
        return Err(Error::InvalidDataset("dataset has no samples".into()));
    }
    selector.validate(spec)?;
    let eval = evaluate(spec, weights, dataset)?;
    let mut rows = Vec::new();
    for i in 0..dataset.len() {
        let outcome = eval.outcomes[i];
        if let Some(want) = outcome_filter {
            if outcome != want {
                continue;
            }
        }
        rows.push(RankedSample {
            index: i,
            subject_id: dataset.subject_id(i),
            outcome,
            score: neuron_activation(spec, weights, dataset.sample(i), selector)?,
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyCategory(format!(
            "no sample has outcome {}",
            outcome_filter.expect("unfiltered ranking cannot be empty")
        )));
    }
    rows.sort_by(|a, b| b.score.partial_cmp(&a.score).expect("finite scores"));
    Ok(rows)
}

/// Top-k subjects by activation summed over their filtered samples.
pub fn rank_subjects(
    spec: &ModelSpec,
    weights: &Weights,
    dataset: &LabeledDataset,
    selector: NeuronSelector,
    outcome_filter: Option<Outcome>,
    k: usize,
) -> Result<Vec<RankedSubject>> {
    let samples = rank_samples(spec, weights, dataset, selector, outcome_filter)?;
    let mut totals: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    for row in &samples {
        let entry = totals.entry(row.subject_id).or_insert((0.0, 0));
        entry.0 += row.score;
        entry.1 += 1;
    }
    let mut subjects: Vec<RankedSubject> = totals
        .into_iter()
        .map(|(subject_id, (total, sample_count))| RankedSubject {
            subject_id,
            total,
            sample_count,
        })
        .collect();
    subjects.sort_by(|a, b| b.total.partial_cmp(&a.total).expect("finite totals"));
    subjects.truncate(k);
    Ok(subjects)
}
