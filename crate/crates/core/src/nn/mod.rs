//! Layer descriptions, weight containers, and shape propagation for the
//! convolutional classifier.

pub mod forward;
pub mod grad;
pub mod ops;

pub use forward::{forward, ForwardTrace};
pub use grad::{activation_with_gradient, input_gradient, NeuronSelector};
pub use ops::{conv_forward, fc_forward, maxpool_forward, relu, softmax, Switches};

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One layer of the network, in execution order.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    /// Valid cross-correlation, stride 1, no padding.
    Conv {
        kernel_h: usize,
        kernel_w: usize,
        filters: usize,
    },
    /// 2x2 window, stride 2, ceil-mode with windows clamped at the borders.
    MaxPool,
    /// Identity outside training; the trainer samples the masks.
    Dropout { rate: f64 },
    Relu,
    Flatten,
    FullyConnected { units: usize },
    Softmax,
}

/// Ordered layer stack plus the `[channels, time]` input shape it accepts.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub input_shape: [usize; 2],
    pub layers: Vec<LayerSpec>,
}

impl ModelSpec {
    pub fn new(channels: usize, time: usize, layers: Vec<LayerSpec>) -> Self {
        ModelSpec {
            input_shape: [channels, time],
            layers,
        }
    }

    /// Full-depth stack: six conv layers in four pooled blocks, then two
    /// fully connected layers and a softmax.
    pub fn reference(channels: usize, time: usize) -> Self {
        use LayerSpec::*;
        let mut layers = Vec::new();
        for (kh, kw, f) in [(3, 3, 100), (3, 3, 100), (2, 3, 300), (1, 7, 300)] {
            layers.push(Conv {
                kernel_h: kh,
                kernel_w: kw,
                filters: f,
            });
            layers.push(Relu);
            layers.push(MaxPool);
            layers.push(Dropout { rate: 0.25 });
        }
        for (kh, kw, f) in [(1, 3, 100), (1, 3, 100)] {
            layers.push(Conv {
                kernel_h: kh,
                kernel_w: kw,
                filters: f,
            });
            layers.push(Relu);
        }
        layers.push(Flatten);
        layers.push(FullyConnected { units: 6144 });
        layers.push(Relu);
        layers.push(FullyConnected { units: 2 });
        layers.push(Softmax);
        ModelSpec::new(channels, time, layers)
    }

    /// Desk-scale variant with three pooled conv blocks; trains in minutes on
    /// a single core.
    pub fn compact(channels: usize, time: usize) -> Self {
        use LayerSpec::*;
        let mut layers = Vec::new();
        for (kh, kw, f) in [(3, 3, 6), (3, 3, 8), (1, 3, 8)] {
            layers.push(Conv {
                kernel_h: kh,
                kernel_w: kw,
                filters: f,
            });
            layers.push(Relu);
            layers.push(MaxPool);
            layers.push(Dropout { rate: 0.25 });
        }
        layers.push(Flatten);
        layers.push(FullyConnected { units: 16 });
        layers.push(Relu);
        layers.push(FullyConnected { units: 2 });
        layers.push(Softmax);
        ModelSpec::new(channels, time, layers)
    }

    /// Output shape after every layer for this spec's own input shape.
    pub fn shapes(&self) -> Result<Vec<Vec<usize>>> {
        shape_propagate(&self.layers, self.input_shape)
    }

    /// Checks shape propagation, dropout rates, and the classifier tail.
    pub fn validate(&self) -> Result<()> {
        self.shapes()?;
        for layer in &self.layers {
            if let LayerSpec::Dropout { rate } = layer {
                if !(0.0..1.0).contains(rate) {
                    return Err(Error::InvalidConfig(format!(
                        "dropout rate {rate} outside [0, 1)"
                    )));
                }
            }
        }
        let n = self.layers.len();
        let tail_ok = n >= 2
            && matches!(self.layers[n - 2], LayerSpec::FullyConnected { units: 2 })
            && matches!(self.layers[n - 1], LayerSpec::Softmax);
        if !tail_ok {
            return Err(Error::InvalidConfig(
                "model must end with a 2-unit fully connected layer and softmax".into(),
            ));
        }
        Ok(())
    }
}

/// Output dimensions after each layer, starting from `[1, channels, time]`.
///
/// Conv shrinks spatial dims by kernel−1; pooling halves them rounding up,
/// with border windows clamped to the input extent.
pub fn shape_propagate(layers: &[LayerSpec], input_shape: [usize; 2]) -> Result<Vec<Vec<usize>>> {
    let [channels, time] = input_shape;
    if channels == 0 || time == 0 {
        return Err(Error::InvalidShape(format!(
            "input shape [{channels}, {time}] has a zero dimension"
        )));
    }
    let mut shape = vec![1, channels, time];
    let mut out = Vec::with_capacity(layers.len());
    for (idx, layer) in layers.iter().enumerate() {
        shape = match layer {
            LayerSpec::Conv {
                kernel_h,
                kernel_w,
                filters,
            } => {
                if *kernel_h == 0 || *kernel_w == 0 || *filters == 0 {
                    return Err(Error::InvalidShape(format!(
                        "layer {idx}: conv kernel {kernel_h}x{kernel_w}x{filters} has a zero dimension"
                    )));
                }
                let [_, h, w] = rank3(&shape, idx)?;
                if h < *kernel_h || w < *kernel_w {
                    return Err(Error::InvalidShape(format!(
                        "layer {idx}: kernel {kernel_h}x{kernel_w} exceeds input {h}x{w}"
                    )));
                }
                vec![*filters, h - kernel_h + 1, w - kernel_w + 1]
            }
            LayerSpec::MaxPool => {
                let [d, h, w] = rank3(&shape, idx)?;
                vec![d, h.div_ceil(2), w.div_ceil(2)]
            }
            LayerSpec::Dropout { .. } | LayerSpec::Relu => shape,
            LayerSpec::Flatten => {
                let [d, h, w] = rank3(&shape, idx)?;
                vec![d * h * w]
            }
            LayerSpec::FullyConnected { units } => {
                if shape.len() != 1 {
                    return Err(Error::InvalidShape(format!(
                        "layer {idx}: fully connected layer needs flattened input, got {shape:?}"
                    )));
                }
                vec![*units]
            }
            LayerSpec::Softmax => {
                if shape.len() != 1 {
                    return Err(Error::InvalidShape(format!(
                        "layer {idx}: softmax needs a vector input, got {shape:?}"
                    )));
                }
                shape
            }
        };
        out.push(shape.clone());
    }
    Ok(out)
}

fn rank3(shape: &[usize], idx: usize) -> Result<[usize; 3]> {
    match shape {
        [d, h, w] => Ok([*d, *h, *w]),
        other => Err(Error::InvalidShape(format!(
            "layer {idx}: expected a depth x height x width input, got {other:?}"
        ))),
    }
}

/// Parameters of one layer; `None` for parameterless kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerParams {
    /// Kernels shaped `[filters, in_depth, kh, kw]`, one bias per filter.
    Conv { kernels: Tensor, bias: Vec<f64> },
    /// Weight matrix shaped `[units, inputs]`, one bias per unit.
    Fc { weight: Tensor, bias: Vec<f64> },
    None,
}

/// Learned parameters, aligned index-for-index with a spec's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub layers: Vec<LayerParams>,
}

impl Weights {
    /// Seeded uniform init in ±sqrt(6 / (fan_in + fan_out)); biases zero.
    pub fn init(spec: &ModelSpec, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::build(spec, |shape, fan_in, fan_out| {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            Tensor::from_fn(shape, |_| rng.gen_range(-bound..bound))
        })
    }

    /// All-zero parameters with the spec's structure.
    pub fn zeros(spec: &ModelSpec) -> Result<Self> {
        Self::build(spec, |shape, _, _| Tensor::zeros(shape))
    }

    fn build(
        spec: &ModelSpec,
        mut make: impl FnMut(&[usize], usize, usize) -> Tensor,
    ) -> Result<Self> {
        let shapes = spec.shapes()?;
        let mut in_shape = vec![1, spec.input_shape[0], spec.input_shape[1]];
        let mut layers = Vec::with_capacity(spec.layers.len());
        for (layer, out_shape) in spec.layers.iter().zip(&shapes) {
            layers.push(match layer {
                LayerSpec::Conv {
                    kernel_h,
                    kernel_w,
                    filters,
                } => {
                    let in_depth = in_shape[0];
                    let fan_in = in_depth * kernel_h * kernel_w;
                    let fan_out = filters * kernel_h * kernel_w;
                    LayerParams::Conv {
                        kernels: make(&[*filters, in_depth, *kernel_h, *kernel_w], fan_in, fan_out),
                        bias: vec![0.0; *filters],
                    }
                }
                LayerSpec::FullyConnected { units } => {
                    let inputs = in_shape[0];
                    LayerParams::Fc {
                        weight: make(&[*units, inputs], inputs, *units),
                        bias: vec![0.0; *units],
                    }
                }
                _ => LayerParams::None,
            });
            in_shape = out_shape.clone();
        }
        Ok(Weights { layers })
    }

    /// Same layer kinds and parameter shapes as `other`.
    pub fn same_structure(&self, other: &Weights) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| match (a, b) {
                (
                    LayerParams::Conv { kernels: ka, bias: ba },
                    LayerParams::Conv { kernels: kb, bias: bb },
                ) => ka.shape() == kb.shape() && ba.len() == bb.len(),
                (
                    LayerParams::Fc { weight: wa, bias: ba },
                    LayerParams::Fc { weight: wb, bias: bb },
                ) => wa.shape() == wb.shape() && ba.len() == bb.len(),
                (LayerParams::None, LayerParams::None) => true,
                _ => false,
            })
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                LayerParams::Conv { kernels, bias } => kernels.len() + bias.len(),
                LayerParams::Fc { weight, bias } => weight.len() + bias.len(),
                LayerParams::None => 0,
            })
            .sum()
    }

    /// Flat views over every parameter buffer, in layer order.
    pub(crate) fn buffers(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                LayerParams::Conv { kernels, bias } => {
                    out.push(kernels.data());
                    out.push(bias.as_slice());
                }
                LayerParams::Fc { weight, bias } => {
                    out.push(weight.data());
                    out.push(bias.as_slice());
                }
                LayerParams::None => {}
            }
        }
        out
    }

    pub(crate) fn buffers_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                LayerParams::Conv { kernels, bias } => {
                    out.push(kernels.data_mut());
                    out.push(bias.as_mut_slice());
                }
                LayerParams::Fc { weight, bias } => {
                    out.push(weight.data_mut());
                    out.push(bias.as_mut_slice());
                }
                LayerParams::None => {}
            }
        }
        out
    }
}
