//! Input-space saliency via absolute class-logit gradients, plus
//! quantile-threshold masking with linear in-fill.

use crate::error::{Error, Result};
use crate::nn::{input_gradient, ModelSpec, NeuronSelector, Weights};
use crate::tensor::Tensor;

/// Per-cell absolute sensitivity of one class logit to the input.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    pub values: Tensor,
}

/// Elementwise `|d logit_class / d input|` with network parameters fixed.
pub fn saliency(
    spec: &ModelSpec,
    weights: &Weights,
    input: &Tensor,
    class: usize,
) -> Result<SaliencyMap> {
    let selector = NeuronSelector::class_neuron(spec, class)?;
    let grad = input_gradient(spec, weights, input, selector)?;
    Ok(SaliencyMap {
        values: grad.map(f64::abs),
    })
}

/// A sample with its low-saliency cells replaced by linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedSample {
    pub masked: Tensor,
    /// True where the saliency fell strictly below the threshold.
    pub below: Vec<bool>,
    /// Channels left untouched because every cell fell below the threshold.
    pub untouched_channels: Vec<usize>,
}

/// Replaces cells whose saliency is strictly below the given quantile of the
/// whole map with linear interpolation between the surviving neighbors along
/// time; runs touching a channel edge extend the nearest surviving value.
///
/// A channel with no surviving cell is left unchanged and reported in
/// `untouched_channels`.
pub fn saliency_mask(input: &Tensor, map: &SaliencyMap, quantile: f64) -> Result<MaskedSample> {
    if input.shape() != map.values.shape() {
        return Err(Error::ShapeMismatch(format!(
            "input {:?} vs saliency map {:?}",
            input.shape(),
            map.values.shape()
        )));
    }
    if !(0.0..=1.0).contains(&quantile) {
        return Err(Error::InvalidConfig(format!(
            "quantile {quantile} outside [0, 1]"
        )));
    }
    let [ch, t] = match input.shape() {
        [c, t] => [*c, *t],
        other => {
            return Err(Error::InvalidShape(format!(
                "expected a channels x time sample, got {other:?}"
            )))
        }
    };
    let threshold = quantile_value(map.values.data(), quantile);
    let below: Vec<bool> = map.values.data().iter().map(|v| *v < threshold).collect();
    let mut masked = input.clone();
    let mut untouched = Vec::new();
    for c in 0..ch {
        let row_below = &below[c * t..(c + 1) * t];
        let kept: Vec<usize> = (0..t).filter(|i| !row_below[*i]).collect();
        if kept.is_empty() {
            untouched.push(c);
            continue;
        }
        let src: Vec<f64> = input.data()[c * t..(c + 1) * t].to_vec();
        let row = &mut masked.data_mut()[c * t..(c + 1) * t];
        let mut next = 0;
        for i in 0..t {
            if !row_below[i] {
                continue;
            }
            while next < kept.len() && kept[next] < i {
                next += 1;
            }
            let right = kept.get(next).copied();
            let left = next.checked_sub(1).map(|p| kept[p]);
            row[i] = match (left, right) {
                (Some(a), Some(b)) => {
                    let frac = (i - a) as f64 / (b - a) as f64;
                    src[a] + frac * (src[b] - src[a])
                }
                (None, Some(b)) => src[b],
                (Some(a), None) => src[a],
                (None, None) => unreachable!("kept is non-empty"),
            };
        }
    }
    Ok(MaskedSample {
        masked,
        below,
        untouched_channels: untouched,
    })
}

/// Linear-interpolation quantile of the values (the same convention as
/// `numpy.quantile`'s default).
fn quantile_value(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("saliency values are finite"));
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 >= sorted.len() {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{LayerParams, LayerSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear_model(seed: u64) -> (ModelSpec, Weights) {
        let spec = ModelSpec::new(
            2,
            6,
            vec![
                LayerSpec::Flatten,
                LayerSpec::FullyConnected { units: 2 },
                LayerSpec::Softmax,
            ],
        );
        let weights = Weights::init(&spec, seed).unwrap();
        (spec, weights)
    }

    fn map_of(values: Tensor) -> SaliencyMap {
        SaliencyMap { values }
    }

    #[test]
    fn linear_class_saliency_is_absolute_weight_row() {
        let (spec, weights) = linear_model(3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let input = Tensor::from_fn(&[2, 6], |_| rng.gen_range(-1.0..1.0));
        let map = saliency(&spec, &weights, &input, 1).unwrap();
        let row = match &weights.layers[1] {
            LayerParams::Fc { weight, .. } => &weight.data()[12..24],
            _ => unreachable!(),
        };
        for (m, w) in map.values.data().iter().zip(row) {
            assert!((m - w.abs()).abs() < 1e-12);
            assert!(*m >= 0.0);
        }
    }

    #[test]
    fn small_network_saliency_matches_finite_differences() {
        let spec = ModelSpec::new(
            3,
            8,
            vec![
                LayerSpec::Conv {
                    kernel_h: 2,
                    kernel_w: 3,
                    filters: 2,
                },
                LayerSpec::Relu,
                LayerSpec::MaxPool,
                LayerSpec::Flatten,
                LayerSpec::FullyConnected { units: 2 },
                LayerSpec::Softmax,
            ],
        );
        let weights = Weights::init(&spec, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let input = Tensor::from_fn(&[3, 8], |_| rng.gen_range(-1.0..1.0));
        let map = saliency(&spec, &weights, &input, 0).unwrap();
        let sel = NeuronSelector::class_neuron(&spec, 0).unwrap();
        let h = 1e-6;
        for idx in [0, 5, 11, 17, 23] {
            let mut plus = input.clone();
            plus.data_mut()[idx] += h;
            let mut minus = input.clone();
            minus.data_mut()[idx] -= h;
            let activation =
                |x: &Tensor| crate::nn::activation_with_gradient(&spec, &weights, x, sel)
                    .unwrap()
                    .0;
            let fd = ((activation(&plus) - activation(&minus)) / (2.0 * h)).abs();
            let got = map.values.data()[idx];
            assert!(
                (fd - got).abs() / (fd.abs() + 1e-8) < 1e-3,
                "cell {idx}: fd {fd} vs map {got}"
            );
        }
    }

    #[test]
    fn interior_run_interpolates_linearly() {
        let input = Tensor::from_vec(&[1, 4], vec![1.0, 9.0, -5.0, 4.0]).unwrap();
        let map = map_of(Tensor::from_vec(&[1, 4], vec![8.0, 0.1, 0.2, 9.0]).unwrap());
        let out = saliency_mask(&input, &map, 0.5).unwrap();
        assert_eq!(out.masked.data(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(out.below, vec![false, true, true, false]);
        assert!(out.untouched_channels.is_empty());
    }

    #[test]
    fn edge_runs_extend_the_nearest_survivor() {
        let input = Tensor::from_vec(&[1, 5], vec![7.0, 2.0, 5.0, 3.0, 9.0]).unwrap();
        let map = map_of(Tensor::from_vec(&[1, 5], vec![0.0, 0.1, 5.0, 0.2, 0.3]).unwrap());
        let out = saliency_mask(&input, &map, 0.9).unwrap();
        assert_eq!(out.masked.data(), &[5.0, 5.0, 5.0, 5.0, 5.0]);
    }

    #[test]
    fn zero_quantile_changes_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let input = Tensor::from_fn(&[3, 7], |_| rng.gen_range(-1.0..1.0));
        let map = map_of(Tensor::from_fn(&[3, 7], |_| rng.gen_range(0.0..1.0)));
        let out = saliency_mask(&input, &map, 0.0).unwrap();
        assert_eq!(out.masked, input);
        assert!(out.below.iter().all(|b| !b));
    }

    #[test]
    fn fully_suppressed_channel_is_reported_and_left_alone() {
        let input = Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let map = map_of(
            Tensor::from_vec(&[2, 3], vec![0.0, 0.0, 0.0, 5.0, 6.0, 7.0]).unwrap(),
        );
        let out = saliency_mask(&input, &map, 0.5).unwrap();
        assert_eq!(out.untouched_channels, vec![0]);
        assert_eq!(out.masked.data()[..3], [1.0, 2.0, 3.0]);
        assert_eq!(out.masked.data()[3..], [4.0, 5.0, 6.0]);
    }

    #[test]
    fn masking_is_idempotent_under_the_original_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let input = Tensor::from_fn(&[4, 20], |_| rng.gen_range(-2.0..2.0));
        let map = map_of(Tensor::from_fn(&[4, 20], |_| rng.gen_range(0.0..1.0)));
        let once = saliency_mask(&input, &map, 0.3).unwrap();
        let twice = saliency_mask(&once.masked, &map, 0.3).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn quantile_follows_linear_interpolation() {
        let values = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_value(&values, 0.0), 1.0);
        assert_eq!(quantile_value(&values, 1.0), 4.0);
        assert_eq!(quantile_value(&values, 0.5), 2.5);
        assert!((quantile_value(&values, 0.3) - 1.9).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_shapes_and_bad_quantiles() {
        let input = Tensor::zeros(&[2, 4]);
        let map = map_of(Tensor::zeros(&[2, 5]));
        assert!(matches!(
            saliency_mask(&input, &map, 0.3),
            Err(Error::ShapeMismatch(_))
        ));
        let map = map_of(Tensor::zeros(&[2, 4]));
        assert!(matches!(
            saliency_mask(&input, &map, 1.5),
            Err(Error::InvalidConfig(_))
        ));
    }
}
