//! Supervised training with Adamax and dropout, plus per-sample and
//! per-subject majority-vote evaluation.

pub mod adamax;
pub mod loss;

pub use adamax::{adamax_step, AdamaxState};
pub use loss::cross_entropy;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interpret::Outcome;
use crate::nn::forward::{lift_input, run_layers};
use crate::nn::grad::backward_walk;
use crate::nn::{forward, LayerSpec, ModelSpec, Weights};
use crate::seeds;
use crate::tensor::Tensor;

const SALT_INIT: u64 = 0x01;
const SALT_SHUFFLE: u64 = 0x02;
const SALT_DROPOUT: u64 = 0x03;

/// Optimizer and schedule settings.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Decoupled decay: parameters shrink by (1 − lr·decay) each step.
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub rng_seed: u64,
    /// Rate for dropout layers when a command builds the model; mask
    /// sampling itself follows each layer's own rate.
    pub dropout_rate: f64,
    /// Stop after this many epochs without a validation-accuracy improvement.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.002,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.001,
            batch_size: 70,
            epochs: 30,
            rng_seed: 0,
            dropout_rate: 0.25,
            patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate < 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig("learning rate must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::InvalidConfig("beta1 and beta2 must lie in [0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidConfig("dropout rate must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Samples with binary labels and per-sample subject ids.
///
/// Every subject's samples carry a single label, so subject-level splits
/// never leak a subject across partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    samples: Vec<Tensor>,
    labels: Vec<u8>,
    subject_ids: Vec<u32>,
}

impl LabeledDataset {
    pub fn new(samples: Vec<Tensor>, labels: Vec<u8>, subject_ids: Vec<u32>) -> Result<Self> {
        if samples.len() != labels.len() || samples.len() != subject_ids.len() {
            return Err(Error::InvalidDataset(format!(
                "{} samples, {} labels, {} subject ids",
                samples.len(),
                labels.len(),
                subject_ids.len()
            )));
        }
        if let Some(first) = samples.first() {
            if samples.iter().any(|s| s.shape() != first.shape()) {
                return Err(Error::InvalidDataset(
                    "samples do not share one shape".into(),
                ));
            }
        }
        let mut subject_label: BTreeMap<u32, u8> = BTreeMap::new();
        for (label, subject) in labels.iter().zip(&subject_ids) {
            if *label > 1 {
                return Err(Error::InvalidDataset(format!(
                    "label {label} is not binary"
                )));
            }
            match subject_label.insert(*subject, *label) {
                Some(prev) if prev != *label => {
                    return Err(Error::InvalidDataset(format!(
                        "subject {subject} carries both labels"
                    )))
                }
                _ => {}
            }
        }
        Ok(LabeledDataset {
            samples,
            labels,
            subject_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample(&self, i: usize) -> &Tensor {
        &self.samples[i]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn subject_id(&self, i: usize) -> u32 {
        self.subject_ids[i]
    }

    pub fn samples(&self) -> &[Tensor] {
        &self.samples
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn subject_ids(&self) -> &[u32] {
        &self.subject_ids
    }

    /// Distinct subject ids in ascending order.
    pub fn subjects(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.subject_ids.clone();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        LabeledDataset::new(
            indices.iter().map(|&i| self.samples[i].clone()).collect(),
            indices.iter().map(|&i| self.labels[i]).collect(),
            indices.iter().map(|&i| self.subject_ids[i]).collect(),
        )
    }

    /// Splits whole subjects into (rest, holdout), stratified per class so
    /// both sides keep both classes when possible.
    pub fn split_by_subject(&self, holdout_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(0.0..1.0).contains(&holdout_fraction) {
            return Err(Error::InvalidConfig(
                "holdout fraction must lie in [0, 1)".into(),
            ));
        }
        let mut by_class: BTreeMap<u8, Vec<u32>> = BTreeMap::new();
        let mut label_of: BTreeMap<u32, u8> = BTreeMap::new();
        for i in 0..self.len() {
            label_of.insert(self.subject_ids[i], self.labels[i]);
        }
        for (subject, label) in &label_of {
            by_class.entry(*label).or_default().push(*subject);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut holdout_subjects = Vec::new();
        for subjects in by_class.values_mut() {
            subjects.shuffle(&mut rng);
            let take = ((subjects.len() as f64) * holdout_fraction).round() as usize;
            holdout_subjects.extend(subjects.iter().take(take.min(subjects.len())));
        }
        let (mut rest, mut held) = (Vec::new(), Vec::new());
        for i in 0..self.len() {
            if holdout_subjects.contains(&self.subject_ids[i]) {
                held.push(i);
            } else {
                rest.push(i);
            }
        }
        Ok((self.subset(&rest)?, self.subset(&held)?))
    }
}

/// Loss and accuracy trajectory of one epoch.
#[derive(Debug, Clone)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: Option<f64>,
}

/// Majority vote of one subject's sample predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectVote {
    pub subject_id: u32,
    pub label: u8,
    pub predicted: u8,
}

/// Per-sample and per-subject evaluation of fixed weights.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub sample_accuracy: f64,
    pub subject_accuracy: f64,
    pub predictions: Vec<u8>,
    pub outcomes: Vec<Outcome>,
    pub subject_votes: Vec<SubjectVote>,
}

/// Predicted class from logits; the boundary case goes to class 1.
fn predict(logits: &[f64]) -> u8 {
    u8::from(logits[1] >= logits[0])
}

fn majority(votes: &[(u8, u8)]) -> (u8, u8) {
    let label = votes[0].0;
    let ones = votes.iter().filter(|(_, p)| *p == 1).count();
    // An exact tie votes class 0.
    let predicted = u8::from(2 * ones > votes.len());
    (label, predicted)
}

/// Runs the classifier over every sample; dropout inactive.
pub fn evaluate(spec: &ModelSpec, weights: &Weights, dataset: &LabeledDataset) -> Result<Evaluation> {
    if dataset.is_empty() {
        return Err(Error::InvalidDataset("dataset has no samples".into()));
    }
    let predictions: Vec<u8> = dataset
        .samples
        .par_iter()
        .map(|s| forward(spec, weights, s, false).map(|(logits, _, _)| predict(&logits)))
        .collect::<Result<_>>()?;
    let outcomes: Vec<Outcome> = predictions
        .iter()
        .zip(&dataset.labels)
        .map(|(&p, &l)| Outcome::of(l, p))
        .collect();
    let correct = predictions
        .iter()
        .zip(&dataset.labels)
        .filter(|(p, l)| p == l)
        .count();
    let mut per_subject: BTreeMap<u32, Vec<(u8, u8)>> = BTreeMap::new();
    for i in 0..dataset.len() {
        per_subject
            .entry(dataset.subject_ids[i])
            .or_default()
            .push((dataset.labels[i], predictions[i]));
    }
    let subject_votes: Vec<SubjectVote> = per_subject
        .iter()
        .map(|(&subject_id, votes)| {
            let (label, predicted) = majority(votes);
            SubjectVote {
                subject_id,
                label,
                predicted,
            }
        })
        .collect();
    let subject_correct = subject_votes
        .iter()
        .filter(|v| v.label == v.predicted)
        .count();
    Ok(Evaluation {
        sample_accuracy: correct as f64 / dataset.len() as f64,
        subject_accuracy: subject_correct as f64 / subject_votes.len() as f64,
        predictions,
        outcomes,
        subject_votes,
    })
}

struct DropoutPlan {
    /// Shape and rate of each dropout layer, in occurrence order.
    layers: Vec<(Vec<usize>, f64)>,
}

impl DropoutPlan {
    fn of(spec: &ModelSpec) -> Result<Self> {
        let shapes = spec.shapes()?;
        let mut layers = Vec::new();
        for (idx, layer) in spec.layers.iter().enumerate() {
            if let LayerSpec::Dropout { rate } = layer {
                layers.push((shapes[idx].clone(), *rate));
            }
        }
        Ok(DropoutPlan { layers })
    }

    /// Inverted-dropout masks: kept cells carry 1/(1−rate), dropped cells 0.
    fn masks(&self, seed: u64) -> Vec<Tensor> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.layers
            .iter()
            .map(|(shape, rate)| {
                let keep = 1.0 - rate;
                Tensor::from_fn(shape, |_| {
                    if rng.gen::<f64>() < *rate {
                        0.0
                    } else {
                        1.0 / keep
                    }
                })
            })
            .collect()
    }
}

fn sample_gradient(
    spec: &ModelSpec,
    weights: &Weights,
    input: &Tensor,
    label: u8,
    masks: &[Tensor],
) -> Result<(f64, Weights)> {
    let input3 = lift_input(spec, input)?;
    let run = run_layers(spec, weights, &input3, true, Some(masks))?;
    let logits_layer = spec.layers.len() - 2;
    let logits = run.outputs[logits_layer].data();
    let (loss, grad_logits) = cross_entropy(logits, label)?;
    let mut param_grads = Weights::zeros(spec)?;
    backward_walk(
        spec,
        weights,
        &input3,
        &run.outputs,
        &run.switches,
        logits_layer,
        Tensor::from_vec(&[grad_logits.len()], grad_logits)?,
        Some(masks),
        Some(&mut param_grads),
    )?;
    Ok((loss, param_grads))
}

/// Trains from a seeded init; fully deterministic for a given config.
///
/// Shuffling, initialization, and dropout masks all derive from
/// `config.rng_seed`. When a validation set is given, its accuracy lands in
/// the history and drives optional early stopping.
pub fn train(
    spec: &ModelSpec,
    dataset: &LabeledDataset,
    validation: Option<&LabeledDataset>,
    config: &TrainConfig,
) -> Result<(Weights, Vec<EpochStats>)> {
    config.validate()?;
    spec.validate()?;
    if dataset.is_empty() {
        return Err(Error::DegenerateDataset("dataset has no samples".into()));
    }
    let has = |label: u8| dataset.labels.iter().any(|&l| l == label);
    if !has(0) || !has(1) {
        return Err(Error::DegenerateDataset(
            "training needs samples of both classes".into(),
        ));
    }
    let mut weights = Weights::init(spec, seeds::derive(config.rng_seed, SALT_INIT))?;
    let mut state = AdamaxState::for_params(&weights);
    let plan = DropoutPlan::of(spec)?;
    let dropout_base = seeds::derive(config.rng_seed, SALT_DROPOUT);
    let mut history = Vec::with_capacity(config.epochs);
    let mut best_val = f64::NEG_INFINITY;
    let mut stale = 0usize;
    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        let mut rng =
            ChaCha8Rng::seed_from_u64(seeds::derive2(config.rng_seed, SALT_SHUFFLE, epoch as u64));
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let results: Vec<(f64, Weights)> = batch
                .par_iter()
                .map(|&i| {
                    let masks = plan.masks(seeds::derive2(dropout_base, epoch as u64, i as u64));
                    sample_gradient(spec, &weights, dataset.sample(i), dataset.label(i), &masks)
                })
                .collect::<Result<_>>()?;
            let mut grads = Weights::zeros(spec)?;
            for (loss, g) in &results {
                loss_sum += loss;
                for (acc, src) in grads.buffers_mut().iter_mut().zip(g.buffers()) {
                    for (a, s) in acc.iter_mut().zip(src.iter()) {
                        *a += s;
                    }
                }
            }
            let scale = 1.0 / batch.len() as f64;
            for buf in grads.buffers_mut() {
                for v in buf.iter_mut() {
                    *v *= scale;
                }
            }
            adamax_step(&mut weights, &grads, &mut state, config)?;
        }
        let train_eval = evaluate(spec, &weights, dataset)?;
        let val_accuracy = match validation {
            Some(v) => Some(evaluate(spec, &weights, v)?.sample_accuracy),
            None => None,
        };
        history.push(EpochStats {
            epoch,
            mean_loss: loss_sum / dataset.len() as f64,
            train_accuracy: train_eval.sample_accuracy,
            val_accuracy,
        });
        if let (Some(patience), Some(acc)) = (config.patience, val_accuracy) {
            if acc > best_val {
                best_val = acc;
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    break;
                }
            }
        }
    }
    Ok((weights, history))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_sample(fill: f64) -> Tensor {
        Tensor::from_fn(&[2, 6], |i| fill + 0.01 * i as f64)
    }

    fn toy_dataset() -> LabeledDataset {
        let samples = vec![
            toy_sample(1.0),
            toy_sample(1.2),
            toy_sample(-1.0),
            toy_sample(-1.2),
        ];
        LabeledDataset::new(samples, vec![1, 1, 0, 0], vec![0, 0, 1, 1]).unwrap()
    }

    fn toy_spec() -> ModelSpec {
        ModelSpec::new(
            2,
            6,
            vec![
                LayerSpec::Flatten,
                LayerSpec::FullyConnected { units: 4 },
                LayerSpec::Relu,
                LayerSpec::FullyConnected { units: 2 },
                LayerSpec::Softmax,
            ],
        )
    }

    #[test]
    fn dataset_rejects_subject_with_both_labels() {
        let samples = vec![toy_sample(0.0), toy_sample(1.0)];
        assert!(matches!(
            LabeledDataset::new(samples, vec![0, 1], vec![5, 5]),
            Err(Error::InvalidDataset(_))
        ));
    }

    #[test]
    fn dataset_rejects_nonbinary_labels() {
        assert!(LabeledDataset::new(vec![toy_sample(0.0)], vec![2], vec![0]).is_err());
    }

    #[test]
    fn dataset_rejects_mixed_shapes() {
        let samples = vec![toy_sample(0.0), Tensor::zeros(&[3, 6])];
        assert!(LabeledDataset::new(samples, vec![0, 1], vec![0, 1]).is_err());
    }

    #[test]
    fn zero_learning_rate_keeps_initial_weights() {
        let spec = toy_spec();
        let config = TrainConfig {
            learning_rate: 0.0,
            epochs: 1,
            batch_size: 2,
            rng_seed: 5,
            ..TrainConfig::default()
        };
        let (trained, history) = train(&spec, &toy_dataset(), None, &config).unwrap();
        let init = Weights::init(&spec, seeds::derive(5, SALT_INIT)).unwrap();
        assert_eq!(trained, init);
        assert_eq!(history.len(), 1);
    }

    #[test]
    fn same_seed_reproduces_weights_bit_for_bit() {
        let spec = toy_spec();
        let config = TrainConfig {
            epochs: 3,
            batch_size: 3,
            rng_seed: 11,
            ..TrainConfig::default()
        };
        let (a, _) = train(&spec, &toy_dataset(), None, &config).unwrap();
        let (b, _) = train(&spec, &toy_dataset(), None, &config).unwrap();
        assert_eq!(a, b);
        let other = TrainConfig {
            rng_seed: 12,
            ..config
        };
        let (c, _) = train(&spec, &toy_dataset(), None, &other).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_class_dataset_is_degenerate() {
        let samples = vec![toy_sample(0.0), toy_sample(1.0)];
        let data = LabeledDataset::new(samples, vec![1, 1], vec![0, 0]).unwrap();
        assert!(matches!(
            train(&toy_spec(), &data, None, &TrainConfig::default()),
            Err(Error::DegenerateDataset(_))
        ));
    }

    #[test]
    fn majority_vote_follows_most_common_prediction() {
        assert_eq!(majority(&[(1, 1), (1, 1), (1, 0)]), (1, 1));
        assert_eq!(majority(&[(0, 1), (0, 0), (0, 0)]), (0, 0));
        // Even split votes class 0.
        assert_eq!(majority(&[(1, 1), (1, 0)]), (1, 0));
    }

    #[test]
    fn one_sample_per_subject_equates_both_accuracies() {
        let spec = toy_spec();
        let weights = Weights::init(&spec, 1).unwrap();
        let data = LabeledDataset::new(
            vec![toy_sample(0.3), toy_sample(-0.4), toy_sample(0.9)],
            vec![1, 0, 1],
            vec![0, 1, 2],
        )
        .unwrap();
        let eval = evaluate(&spec, &weights, &data).unwrap();
        assert_eq!(eval.sample_accuracy, eval.subject_accuracy);
    }

    #[test]
    fn boundary_probability_predicts_class_one() {
        assert_eq!(predict(&[0.7, 0.7]), 1);
        assert_eq!(predict(&[0.8, 0.7]), 0);
        assert_eq!(predict(&[0.7, 0.8]), 1);
    }

    #[test]
    fn subject_split_keeps_subjects_whole() {
        let samples: Vec<Tensor> = (0..12).map(|i| toy_sample(i as f64)).collect();
        let labels = vec![0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1];
        let subjects = vec![0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5];
        let data = LabeledDataset::new(samples, labels, subjects).unwrap();
        let (rest, held) = data.split_by_subject(0.34, 9).unwrap();
        assert_eq!(rest.len() + held.len(), 12);
        for subject in held.subjects() {
            assert!(!rest.subjects().contains(&subject));
        }
        assert!(held.labels().contains(&0) && held.labels().contains(&1));
    }

    #[test]
    fn patience_stops_training_without_improvement() {
        let spec = toy_spec();
        let data = toy_dataset();
        let config = TrainConfig {
            learning_rate: 0.0,
            epochs: 10,
            batch_size: 4,
            patience: Some(2),
            ..TrainConfig::default()
        };
        let (_, history) = train(&spec, &data, Some(&data), &config).unwrap();
        assert_eq!(history.len(), 3);
    }
}
