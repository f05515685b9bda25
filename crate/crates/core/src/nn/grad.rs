//! Backpropagation to the input with weights held fixed, seeded from any
//! conv filter or fully connected unit.

use crate::error::{Error, Result};
use crate::nn::forward::{lift_input, run_layers};
use crate::nn::ops::{self, Switches};
use crate::nn::{LayerParams, LayerSpec, ModelSpec, Weights};
use crate::tensor::Tensor;

/// Addresses one unit: a conv layer's filter or a fully connected unit.
///
/// Classification neurons are the units of the final fully connected layer,
/// so their activations and gradients are always pre-softmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeuronSelector {
    pub layer: usize,
    pub unit: usize,
}

pub(crate) enum SelectorKind {
    ConvFilter,
    FcUnit,
}

impl NeuronSelector {
    pub fn new(layer: usize, unit: usize) -> Self {
        NeuronSelector { layer, unit }
    }

    /// Selector for classification neuron 0 or 1: the last fully connected
    /// layer's unit, never the softmax output.
    pub fn class_neuron(spec: &ModelSpec, class: usize) -> Result<Self> {
        if class > 1 {
            return Err(Error::InvalidSelector(format!(
                "classification neuron {class} does not exist"
            )));
        }
        let layer = spec
            .layers
            .iter()
            .rposition(|l| matches!(l, LayerSpec::FullyConnected { .. }))
            .ok_or_else(|| {
                Error::InvalidSelector("model has no fully connected layer".into())
            })?;
        Ok(NeuronSelector { layer, unit: class })
    }

    pub(crate) fn validate(&self, spec: &ModelSpec) -> Result<SelectorKind> {
        let layer = spec.layers.get(self.layer).ok_or_else(|| {
            Error::InvalidSelector(format!(
                "layer {} out of range for a {}-layer model",
                self.layer,
                spec.layers.len()
            ))
        })?;
        match layer {
            LayerSpec::Conv { filters, .. } => {
                if self.unit >= *filters {
                    return Err(Error::InvalidSelector(format!(
                        "filter {} out of range for {filters} filters",
                        self.unit
                    )));
                }
                Ok(SelectorKind::ConvFilter)
            }
            LayerSpec::FullyConnected { units } => {
                if self.unit >= *units {
                    return Err(Error::InvalidSelector(format!(
                        "unit {} out of range for {units} units",
                        self.unit
                    )));
                }
                Ok(SelectorKind::FcUnit)
            }
            other => Err(Error::InvalidSelector(format!(
                "layer {} ({other:?}) has no addressable units",
                self.layer
            ))),
        }
    }
}

/// Walks gradients from `start_layer`'s output down to the network input.
///
/// `seed` is the gradient at that layer's output. Dropout layers multiply by
/// their forward mask when masks are given. When `param_grads` is supplied,
/// conv and fully connected parameter gradients accumulate into it.
pub(crate) fn backward_walk(
    spec: &ModelSpec,
    weights: &Weights,
    input3: &Tensor,
    outputs: &[Tensor],
    switches: &[Option<Switches>],
    start_layer: usize,
    seed: Tensor,
    masks: Option<&[Tensor]>,
    mut param_grads: Option<&mut Weights>,
) -> Result<Tensor> {
    let mut dropout_ordinal: Vec<usize> = Vec::with_capacity(spec.layers.len());
    let mut seen = 0;
    for layer in &spec.layers {
        dropout_ordinal.push(seen);
        if matches!(layer, LayerSpec::Dropout { .. }) {
            seen += 1;
        }
    }
    let mut grad = seed;
    for l in (0..=start_layer).rev() {
        let layer_input = if l == 0 { input3 } else { &outputs[l - 1] };
        grad = match (&spec.layers[l], &weights.layers[l]) {
            (LayerSpec::Conv { .. }, LayerParams::Conv { kernels, .. }) => {
                if let Some(pg) = param_grads.as_deref_mut() {
                    let (kg, bg) = ops::conv_param_grad(layer_input, &grad, kernels.shape())?;
                    if let LayerParams::Conv { kernels: gk, bias: gb } = &mut pg.layers[l] {
                        gk.add_scaled(&kg, 1.0);
                        for (a, b) in gb.iter_mut().zip(&bg) {
                            *a += b;
                        }
                    }
                }
                ops::conv_input_adjoint(&grad, kernels)?
            }
            (LayerSpec::Relu, _) => {
                let mut gated = grad;
                for (g, &x) in gated.data_mut().iter_mut().zip(layer_input.data()) {
                    if x <= 0.0 {
                        *g = 0.0;
                    }
                }
                gated
            }
            (LayerSpec::MaxPool, _) => {
                let sw = switches[l].as_ref().ok_or_else(|| {
                    Error::SwitchMismatch(format!("no switches recorded for layer {l}"))
                })?;
                ops::unpool(&grad, sw)?
            }
            (LayerSpec::Dropout { .. }, _) => match masks {
                Some(all) => {
                    let mask = &all[dropout_ordinal[l]];
                    let mut gated = grad;
                    for (g, m) in gated.data_mut().iter_mut().zip(mask.data()) {
                        *g *= m;
                    }
                    gated
                }
                None => grad,
            },
            (LayerSpec::Flatten, _) => grad.reshaped(layer_input.shape())?,
            (LayerSpec::FullyConnected { .. }, LayerParams::Fc { weight, .. }) => {
                let (units, cols) = (weight.shape()[0], weight.shape()[1]);
                if let Some(pg) = param_grads.as_deref_mut() {
                    if let LayerParams::Fc { weight: gw, bias: gb } = &mut pg.layers[l] {
                        let gwd = gw.data_mut();
                        for u in 0..units {
                            let gu = grad.data()[u];
                            gb[u] += gu;
                            let row = &mut gwd[u * cols..(u + 1) * cols];
                            for (wv, xv) in row.iter_mut().zip(layer_input.data()) {
                                *wv += gu * xv;
                            }
                        }
                    }
                }
                let mut back = vec![0.0; cols];
                for u in 0..units {
                    let gu = grad.data()[u];
                    if gu == 0.0 {
                        continue;
                    }
                    let row = &weight.data()[u * cols..(u + 1) * cols];
                    for (b, wv) in back.iter_mut().zip(row) {
                        *b += gu * wv;
                    }
                }
                Tensor::from_vec(&[cols], back)?
            }
            (LayerSpec::Softmax, _) => {
                return Err(Error::InvalidSelector(
                    "gradients are taken at pre-softmax logits, not through softmax".into(),
                ))
            }
            (layer, _) => {
                return Err(Error::ShapeMismatch(format!(
                    "weights do not carry parameters for layer {layer:?}"
                )))
            }
        };
    }
    Ok(grad)
}

fn seed_for(selector: NeuronSelector, kind: &SelectorKind, output: &Tensor) -> (f64, Tensor) {
    match kind {
        SelectorKind::ConvFilter => {
            let mut seed = Tensor::zeros(output.shape());
            seed.plane_mut(selector.unit).fill(1.0);
            (output.plane(selector.unit).iter().sum(), seed)
        }
        SelectorKind::FcUnit => {
            let mut seed = Tensor::zeros(output.shape());
            seed.data_mut()[selector.unit] = 1.0;
            (output.data()[selector.unit], seed)
        }
    }
}

/// The selected unit's activation together with its gradient at the input.
///
/// Conv filters report their feature map's sum; scalar units their value.
pub fn activation_with_gradient(
    spec: &ModelSpec,
    weights: &Weights,
    input: &Tensor,
    selector: NeuronSelector,
) -> Result<(f64, Tensor)> {
    let kind = selector.validate(spec)?;
    let input3 = lift_input(spec, input)?;
    let run = run_layers(spec, weights, &input3, true, None)?;
    let (activation, seed) = seed_for(selector, &kind, &run.outputs[selector.layer]);
    let grad3 = backward_walk(
        spec,
        weights,
        &input3,
        &run.outputs,
        &run.switches,
        selector.layer,
        seed,
        None,
        None,
    )?;
    let grad = grad3.reshaped(input.shape())?;
    if !grad.all_finite() {
        return Err(Error::NonFiniteEncountered(
            "input gradient contains non-finite values".into(),
        ));
    }
    Ok((activation, grad))
}

/// Gradient of the selected unit's activation with respect to the input,
/// with all network parameters held fixed.
pub fn input_gradient(
    spec: &ModelSpec,
    weights: &Weights,
    input: &Tensor,
    selector: NeuronSelector,
) -> Result<Tensor> {
    activation_with_gradient(spec, weights, input, selector).map(|(_, g)| g)
}
