//! End-to-end training behavior on generated data: a separable set must be
//! learned, a featureless set must not be, and subject voting must not hurt.

use eegprobe::nn::ModelSpec;
use eegprobe::synth::{generate, SynthSpec};
use eegprobe::train::{evaluate, train, TrainConfig};

fn spec_with(subjects: usize, samples: usize, seed: u64) -> SynthSpec {
    SynthSpec {
        subjects_per_class: subjects,
        samples_per_subject: samples,
        ..SynthSpec::new(subjects, seed)
    }
}

fn quick_config(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size: 20,
        ..TrainConfig::default()
    }
}

#[test]
fn separable_classes_are_learned() {
    let data = generate(&spec_with(6, 20, 1)).unwrap();
    let (train_set, test_set) = data.split_by_subject(0.33, 7).unwrap();
    let model = ModelSpec::compact(24, 256);
    let (weights, history) = train(&model, &train_set, None, &quick_config(15)).unwrap();
    let eval = evaluate(&model, &weights, &test_set).unwrap();
    assert!(
        eval.sample_accuracy > 0.8,
        "held-out accuracy {}",
        eval.sample_accuracy
    );
    assert!(
        eval.subject_accuracy >= eval.sample_accuracy,
        "voting lowered accuracy: {} vs {}",
        eval.subject_accuracy,
        eval.sample_accuracy
    );
    let first = history.first().unwrap().mean_loss;
    let last = history.last().unwrap().mean_loss;
    assert!(last < first, "loss went from {first} to {last}");
}

#[test]
fn featureless_classes_stay_at_chance() {
    let mut spec = spec_with(4, 50, 2);
    spec.class_components[0].clear();
    spec.class_components[1].clear();
    let data = generate(&spec).unwrap();
    assert_eq!(data.labels().len(), 400);
    let (train_set, test_set) = data.split_by_subject(0.5, 3).unwrap();
    let model = ModelSpec::compact(24, 256);
    let (weights, _) = train(&model, &train_set, None, &quick_config(5)).unwrap();
    let eval = evaluate(&model, &weights, &test_set).unwrap();
    assert!(
        (0.4..=0.6).contains(&eval.sample_accuracy),
        "featureless accuracy {}",
        eval.sample_accuracy
    );
}

#[test]
fn validation_history_is_recorded() {
    let data = generate(&spec_with(4, 6, 9)).unwrap();
    let (train_set, val_set) = data.split_by_subject(0.25, 11).unwrap();
    let model = ModelSpec::compact(24, 256);
    let (_, history) = train(&model, &train_set, Some(&val_set), &quick_config(3)).unwrap();
    assert_eq!(history.len(), 3);
    for (i, epoch) in history.iter().enumerate() {
        assert_eq!(epoch.epoch, i);
        assert!(epoch.val_accuracy.is_some());
        assert!(epoch.mean_loss.is_finite());
    }
}
