//! Analytic input gradients checked against central finite differences on a
//! spread of small convolutional models.

use eegprobe::nn::{
    activation_with_gradient, LayerSpec, ModelSpec, NeuronSelector, Weights,
};
use eegprobe::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_model(rng: &mut ChaCha8Rng) -> (ModelSpec, Weights) {
    let channels = rng.gen_range(4..8);
    let time = rng.gen_range(14..24);
    let f1 = rng.gen_range(2..4);
    let f2 = rng.gen_range(2..4);
    let spec = ModelSpec::new(
        channels,
        time,
        vec![
            LayerSpec::Conv {
                kernel_h: rng.gen_range(2..4),
                kernel_w: rng.gen_range(2..4),
                filters: f1,
            },
            LayerSpec::Relu,
            LayerSpec::MaxPool,
            LayerSpec::Conv {
                kernel_h: 1,
                kernel_w: rng.gen_range(2..4),
                filters: f2,
            },
            LayerSpec::Relu,
            LayerSpec::Flatten,
            LayerSpec::FullyConnected { units: 2 },
            LayerSpec::Softmax,
        ],
    );
    spec.validate().expect("generated model is valid");
    let weights = Weights::init(&spec, rng.gen()).unwrap();
    (spec, weights)
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF00D);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (spec, weights) = random_model(&mut rng);
        let input = Tensor::from_fn(&[spec.input_shape[0], spec.input_shape[1]], |_| {
            rng.gen_range(-1.0..1.0)
        });
        let class = rng.gen_range(0..2);
        let selector = NeuronSelector::class_neuron(&spec, class).unwrap();
        let (_, grad) = activation_with_gradient(&spec, &weights, &input, selector).unwrap();
        for _ in 0..50 {
            let idx = rng.gen_range(0..input.len());
            let mut plus = input.clone();
            plus.data_mut()[idx] += h;
            let mut minus = input.clone();
            minus.data_mut()[idx] -= h;
            let a_plus = activation_with_gradient(&spec, &weights, &plus, selector)
                .unwrap()
                .0;
            let a_minus = activation_with_gradient(&spec, &weights, &minus, selector)
                .unwrap()
                .0;
            let numeric = (a_plus - a_minus) / (2.0 * h);
            let rel = (grad.data()[idx] - numeric).abs() / (numeric.abs() + 1e-8);
            worst = worst.max(rel);
        }
    }
    assert!(worst < 1e-4, "worst relative error {worst}");
}

#[test]
fn conv_filter_gradients_also_match() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF);
    let (spec, weights) = random_model(&mut rng);
    let input = Tensor::from_fn(&[spec.input_shape[0], spec.input_shape[1]], |_| {
        rng.gen_range(-1.0..1.0)
    });
    let selector = NeuronSelector::new(3, 1);
    let (_, grad) = activation_with_gradient(&spec, &weights, &input, selector).unwrap();
    let h = 1e-5;
    for _ in 0..30 {
        let idx = rng.gen_range(0..input.len());
        let mut plus = input.clone();
        plus.data_mut()[idx] += h;
        let mut minus = input.clone();
        minus.data_mut()[idx] -= h;
        let a_plus = activation_with_gradient(&spec, &weights, &plus, selector)
            .unwrap()
            .0;
        let a_minus = activation_with_gradient(&spec, &weights, &minus, selector)
            .unwrap()
            .0;
        let numeric = (a_plus - a_minus) / (2.0 * h);
        let rel = (grad.data()[idx] - numeric).abs() / (numeric.abs() + 1e-8);
        assert!(rel < 1e-4, "coordinate {idx}: relative error {rel}");
    }
}
