//! Regularized activation maximization: gradient ascent on the input with
//! total-variation and L1 penalties plus circular time jitter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{activation_with_gradient, ModelSpec, NeuronSelector, Weights};
use crate::tensor::Tensor;

/// Ascent schedule and regularizer weights.
#[derive(Debug, Clone)]
pub struct AMConfig {
    pub step_size: f64,
    pub iterations: usize,
    /// Maximum circular shift along time applied before each forward pass.
    pub jitter_max: usize,
    pub tv_weight: f64,
    pub l1_weight: f64,
    pub rng_seed: u64,
    /// Initial input is seeded uniform noise in ±init_scale.
    pub init_scale: f64,
}

impl Default for AMConfig {
    fn default() -> Self {
        AMConfig {
            step_size: 0.1,
            iterations: 400,
            jitter_max: 4,
            tv_weight: 1e-3,
            l1_weight: 1e-4,
            rng_seed: 0,
            init_scale: 0.01,
        }
    }
}

impl AMConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be >= 1".into()));
        }
        if self.step_size <= 0.0 || !self.step_size.is_finite() {
            return Err(Error::InvalidConfig("step size must be positive".into()));
        }
        if self.tv_weight < 0.0 || self.l1_weight < 0.0 {
            return Err(Error::InvalidConfig(
                "regularizer weights must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Sum of absolute adjacent differences along both channel and time axes.
pub fn total_variation(x: &Tensor) -> f64 {
    let [ch, t] = dims2(x);
    let mut tv = 0.0;
    for c in 0..ch {
        for i in 0..t - 1 {
            tv += (x.data()[c * t + i + 1] - x.data()[c * t + i]).abs();
        }
    }
    for c in 0..ch.saturating_sub(1) {
        for i in 0..t {
            tv += (x.data()[(c + 1) * t + i] - x.data()[c * t + i]).abs();
        }
    }
    tv
}

/// Sum of absolute values.
pub fn l1_norm(x: &Tensor) -> f64 {
    x.data().iter().map(|v| v.abs()).sum()
}

/// Subgradient of `total_variation`; sign(0) taken as 0.
pub fn tv_subgradient(x: &Tensor) -> Tensor {
    let [ch, t] = dims2(x);
    let mut g = Tensor::zeros(x.shape());
    let data = x.data();
    for c in 0..ch {
        for i in 0..t - 1 {
            let s = (data[c * t + i + 1] - data[c * t + i]).signum_or_zero();
            g.data_mut()[c * t + i + 1] += s;
            g.data_mut()[c * t + i] -= s;
        }
    }
    for c in 0..ch.saturating_sub(1) {
        for i in 0..t {
            let s = (data[(c + 1) * t + i] - data[c * t + i]).signum_or_zero();
            g.data_mut()[(c + 1) * t + i] += s;
            g.data_mut()[c * t + i] -= s;
        }
    }
    g
}

/// Subgradient of `l1_norm`; sign(0) taken as 0.
pub fn l1_subgradient(x: &Tensor) -> Tensor {
    x.map(|v| v.signum_or_zero())
}

trait SignumOrZero {
    fn signum_or_zero(self) -> f64;
}

impl SignumOrZero for f64 {
    fn signum_or_zero(self) -> f64 {
        if self > 0.0 {
            1.0
        } else if self < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
}

/// Circular shift along the time axis; positive `s` moves samples later.
pub(crate) fn shift_time(x: &Tensor, s: i64) -> Tensor {
    let [ch, t] = dims2(x);
    let t_i = t as i64;
    let s = ((s % t_i) + t_i) % t_i;
    let mut out = Tensor::zeros(x.shape());
    for c in 0..ch {
        for i in 0..t {
            let src = (i as i64 - s).rem_euclid(t_i) as usize;
            out.data_mut()[c * t + i] = x.data()[c * t + src];
        }
    }
    out
}

fn dims2(x: &Tensor) -> [usize; 2] {
    match x.shape() {
        [a, b] => [*a, *b],
        other => panic!("expected a channels x time tensor, got {other:?}"),
    }
}

/// Gradient ascent from seeded noise toward high activation of the selected
/// unit, with TV + L1 shrinkage and per-iteration circular time jitter.
///
/// Returns the synthesized input and the per-iteration activation values
/// (measured on the jittered input before each update).
pub fn activation_maximize(
    spec: &ModelSpec,
    weights: &Weights,
    selector: NeuronSelector,
    config: &AMConfig,
) -> Result<(Tensor, Vec<f64>)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let scale = config.init_scale;
    let mut x = Tensor::from_fn(
        &[spec.input_shape[0], spec.input_shape[1]],
        |_| rng.gen_range(-scale..=scale),
    );
    let mut trajectory = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        let shift = if config.jitter_max > 0 {
            rng.gen_range(-(config.jitter_max as i64)..=(config.jitter_max as i64))
        } else {
            0
        };
        let jittered = if shift == 0 { x.clone() } else { shift_time(&x, shift) };
        let (activation, grad_jittered) =
            activation_with_gradient(spec, weights, &jittered, selector)?;
        trajectory.push(activation);
        let grad = if shift == 0 {
            grad_jittered
        } else {
            shift_time(&grad_jittered, -shift)
        };
        x.add_scaled(&grad, config.step_size);
        if config.tv_weight > 0.0 {
            x.add_scaled(&tv_subgradient(&x), -config.step_size * config.tv_weight);
        }
        if config.l1_weight > 0.0 {
            x.add_scaled(&l1_subgradient(&x), -config.step_size * config.l1_weight);
        }
        if !x.all_finite() {
            return Err(Error::NonFiniteEncountered(
                "activation maximization diverged; lower the step size".into(),
            ));
        }
    }
    Ok((x, trajectory))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{LayerParams, LayerSpec};

    fn linear_model(seed: u64) -> (ModelSpec, Weights) {
        let spec = ModelSpec::new(
            2,
            5,
            vec![
                LayerSpec::Flatten,
                LayerSpec::FullyConnected { units: 2 },
                LayerSpec::Softmax,
            ],
        );
        let weights = Weights::init(&spec, seed).unwrap();
        (spec, weights)
    }

    fn fc_row(weights: &Weights, unit: usize, len: usize) -> Vec<f64> {
        match &weights.layers[1] {
            LayerParams::Fc { weight, .. } => {
                weight.data()[unit * len..(unit + 1) * len].to_vec()
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn constant_tensor_has_zero_variation() {
        let x = Tensor::from_vec(&[2, 4], vec![3.7; 8]).unwrap();
        assert_eq!(total_variation(&x), 0.0);
    }

    #[test]
    fn spike_has_hand_computed_norms() {
        let x = Tensor::from_vec(&[1, 3], vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(total_variation(&x), 2.0);
        assert_eq!(l1_norm(&x), 1.0);
    }

    #[test]
    fn variation_counts_both_axes() {
        let x = Tensor::from_vec(&[2, 2], vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        // Time differences: |1-0| + |3-2| = 2; channel: |2-0| + |3-1| = 4.
        assert_eq!(total_variation(&x), 6.0);
    }

    #[test]
    fn subgradients_match_finite_differences_away_from_kinks() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let x = Tensor::from_fn(&[3, 6], |_| rng.gen_range(-1.0..1.0));
        let gtv = tv_subgradient(&x);
        let gl1 = l1_subgradient(&x);
        let h = 1e-7;
        for idx in [0, 4, 7, 11, 17] {
            let mut plus = x.clone();
            plus.data_mut()[idx] += h;
            let mut minus = x.clone();
            minus.data_mut()[idx] -= h;
            let fd_tv = (total_variation(&plus) - total_variation(&minus)) / (2.0 * h);
            let fd_l1 = (l1_norm(&plus) - l1_norm(&minus)) / (2.0 * h);
            // Both functionals are piecewise linear, so away from kinks the
            // centered difference equals the subgradient up to roundoff.
            assert!((fd_tv - gtv.data()[idx]).abs() < 1e-5);
            assert!((fd_l1 - gl1.data()[idx]).abs() < 1e-5);
        }
    }

    #[test]
    fn time_shift_round_trips() {
        let x = Tensor::from_fn(&[2, 5], |i| i as f64);
        for s in [-7, -1, 0, 2, 5, 9] {
            let back = shift_time(&shift_time(&x, s), -s);
            assert_eq!(back, x);
        }
        let shifted = shift_time(&x, 1);
        assert_eq!(shifted.data()[..5], [4.0, 0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn linear_neuron_synthesis_follows_its_weight_row() {
        let (spec, weights) = linear_model(13);
        let sel = NeuronSelector::class_neuron(&spec, 0).unwrap();
        let config = AMConfig {
            tv_weight: 0.0,
            l1_weight: 0.0,
            jitter_max: 0,
            ..AMConfig::default()
        };
        let (x, _) = activation_maximize(&spec, &weights, sel, &config).unwrap();
        let w = fc_row(&weights, 0, 10);
        let dot: f64 = x.data().iter().zip(&w).map(|(a, b)| a * b).sum();
        let nx = x.data().iter().map(|v| v * v).sum::<f64>().sqrt();
        let nw = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(dot / (nx * nw) > 0.999);
    }

    #[test]
    fn pure_ascent_trajectory_is_nondecreasing() {
        let (spec, weights) = linear_model(29);
        let sel = NeuronSelector::class_neuron(&spec, 1).unwrap();
        let config = AMConfig {
            tv_weight: 0.0,
            l1_weight: 0.0,
            jitter_max: 0,
            iterations: 50,
            ..AMConfig::default()
        };
        let (_, trajectory) = activation_maximize(&spec, &weights, sel, &config).unwrap();
        assert_eq!(trajectory.len(), 50);
        assert!(trajectory.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn runaway_step_size_reports_divergence() {
        let (spec, mut weights) = linear_model(31);
        // A unit weight row makes the ascent direction all-ones, so two
        // near-max steps push the input past the representable range.
        if let LayerParams::Fc { weight, .. } = &mut weights.layers[1] {
            weight.data_mut()[..10].fill(1.0);
        }
        let sel = NeuronSelector::class_neuron(&spec, 0).unwrap();
        let config = AMConfig {
            step_size: f64::MAX,
            iterations: 5,
            tv_weight: 0.0,
            l1_weight: 0.0,
            jitter_max: 0,
            ..AMConfig::default()
        };
        assert!(matches!(
            activation_maximize(&spec, &weights, sel, &config),
            Err(Error::NonFiniteEncountered(_))
        ));
    }

    #[test]
    fn synthesis_is_seed_deterministic() {
        let (spec, weights) = linear_model(37);
        let sel = NeuronSelector::class_neuron(&spec, 0).unwrap();
        let config = AMConfig {
            iterations: 20,
            ..AMConfig::default()
        };
        let a = activation_maximize(&spec, &weights, sel, &config).unwrap();
        let b = activation_maximize(&spec, &weights, sel, &config).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }
}
