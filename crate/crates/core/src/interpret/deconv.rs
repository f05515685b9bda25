//! Deconvnet reverse path: project one convolutional feature map back to
//! input space through transposed kernels, switch unpooling, and
//! rectification.

use crate::error::{Error, Result};
use crate::nn::ops::{conv_input_adjoint, relu, unpool};
use crate::nn::{ForwardTrace, LayerParams, LayerSpec, ModelSpec, NeuronSelector, Weights};
use crate::tensor::Tensor;

/// Transposed convolution of a feature map through the given kernels,
/// growing each spatial axis by `kernel - 1`.
pub fn deconv_transpose(feature_map: &Tensor, kernels: &Tensor) -> Result<Tensor> {
    conv_input_adjoint(feature_map, kernels)
}

/// Projects the selected filter's feature map from a recorded forward pass
/// back to input space.
///
/// The selected map is isolated (all other filters zeroed), rectified, and
/// then walked down the stack: transposed kernels for convolutions, recorded
/// switches for pooling, rectification for ReLU, identity for dropout.
pub fn deconvnet_reconstruct(
    spec: &ModelSpec,
    weights: &Weights,
    trace: &ForwardTrace,
    selector: NeuronSelector,
) -> Result<Tensor> {
    let filters = match spec.layers.get(selector.layer) {
        Some(LayerSpec::Conv { filters, .. }) => *filters,
        _ => {
            return Err(Error::InvalidSelector(format!(
                "layer {} is not a convolution",
                selector.layer
            )))
        }
    };
    if selector.unit >= filters {
        return Err(Error::InvalidSelector(format!(
            "filter {} out of range for {} filters",
            selector.unit, filters
        )));
    }
    if trace.outputs.len() != spec.layers.len() {
        return Err(Error::ShapeMismatch(format!(
            "trace records {} layers, model has {}",
            trace.outputs.len(),
            spec.layers.len()
        )));
    }
    let map = &trace.outputs[selector.layer];
    let mut masked = Tensor::zeros(map.shape());
    masked
        .plane_mut(selector.unit)
        .copy_from_slice(map.plane(selector.unit));
    let mut signal = relu(&masked);
    for layer in (0..=selector.layer).rev() {
        signal = match (&spec.layers[layer], &weights.layers[layer]) {
            (LayerSpec::Conv { .. }, LayerParams::Conv { kernels, .. }) => {
                conv_input_adjoint(&signal, kernels)?
            }
            (LayerSpec::MaxPool, _) => {
                let switches = trace.switches[layer].as_ref().ok_or_else(|| {
                    Error::SwitchMismatch(format!("no switches recorded at layer {layer}"))
                })?;
                unpool(&signal, switches)?
            }
            (LayerSpec::Relu, _) => relu(&signal),
            (LayerSpec::Dropout { .. }, _) => signal,
            (other, _) => {
                return Err(Error::InvalidSelector(format!(
                    "layer {layer} ({other:?}) below the selected filter is not part of a convolutional stack"
                )))
            }
        };
    }
    let [depth, ch, t] = match signal.shape() {
        [d, c, t] => [*d, *c, *t],
        other => {
            return Err(Error::InvalidShape(format!(
                "reconstruction ended with shape {other:?}"
            )))
        }
    };
    if depth != 1 {
        return Err(Error::InvalidShape(format!(
            "reconstruction ended with {depth} planes"
        )));
    }
    signal.reshaped(&[ch, t])
}
