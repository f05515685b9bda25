//! Forward execution of a layer stack, with optional per-layer trace
//! recording for the reverse-path visualizations.

use crate::error::{Error, Result};
use crate::nn::ops::{self, Switches};
use crate::nn::{LayerParams, LayerSpec, ModelSpec, Weights};
use crate::tensor::Tensor;

/// Everything recorded during one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Output of every layer, in layer order.
    pub outputs: Vec<Tensor>,
    /// Pooling switches, `Some` exactly at max-pool layers.
    pub switches: Vec<Option<Switches>>,
    /// Pre-softmax classifier outputs.
    pub logits: Vec<f64>,
    pub probabilities: Vec<f64>,
}

pub(crate) struct RunOutput {
    pub outputs: Vec<Tensor>,
    pub switches: Vec<Option<Switches>>,
    /// Input to the final layer; the logits when that layer is softmax.
    pub penultimate: Option<Tensor>,
    pub last: Tensor,
}

/// Runs every layer on an already rank-3 input. Dropout multiplies by the
/// matching mask when masks are given, otherwise passes through unchanged.
pub(crate) fn run_layers(
    spec: &ModelSpec,
    weights: &Weights,
    input3: &Tensor,
    record: bool,
    masks: Option<&[Tensor]>,
) -> Result<RunOutput> {
    if weights.layers.len() != spec.layers.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} weight entries for {} layers",
            weights.layers.len(),
            spec.layers.len()
        )));
    }
    let mut outputs = Vec::new();
    let mut switches = Vec::new();
    let mut current = input3.clone();
    let mut penultimate = None;
    let mut dropout_seen = 0;
    for (layer, params) in spec.layers.iter().zip(&weights.layers) {
        let mut switch = None;
        let next = match (layer, params) {
            (LayerSpec::Conv { .. }, LayerParams::Conv { kernels, bias }) => {
                ops::conv_forward(&current, kernels, bias)?
            }
            (LayerSpec::MaxPool, _) => {
                let (pooled, sw) = ops::maxpool_forward(&current)?;
                switch = Some(sw);
                pooled
            }
            (LayerSpec::Relu, _) => ops::relu(&current),
            (LayerSpec::Dropout { .. }, _) => {
                let idx = dropout_seen;
                dropout_seen += 1;
                match masks {
                    Some(all) => {
                        let mask = all.get(idx).ok_or_else(|| {
                            Error::ShapeMismatch(format!(
                                "no dropout mask for dropout layer {idx}"
                            ))
                        })?;
                        if mask.shape() != current.shape() {
                            return Err(Error::ShapeMismatch(format!(
                                "dropout mask shape {:?} vs activation {:?}",
                                mask.shape(),
                                current.shape()
                            )));
                        }
                        let mut masked = current.clone();
                        for (v, m) in masked.data_mut().iter_mut().zip(mask.data()) {
                            *v *= m;
                        }
                        masked
                    }
                    None => current.clone(),
                }
            }
            (LayerSpec::Flatten, _) => {
                let len = current.len();
                current.clone().reshaped(&[len])?
            }
            (LayerSpec::FullyConnected { .. }, LayerParams::Fc { weight, bias }) => {
                ops::fc_forward(&current, weight, bias)?
            }
            (LayerSpec::Softmax, _) => {
                Tensor::from_vec(&[current.len()], ops::softmax(current.data()))?
            }
            (layer, _) => {
                return Err(Error::ShapeMismatch(format!(
                    "weights do not carry parameters for layer {layer:?}"
                )))
            }
        };
        if record {
            outputs.push(next.clone());
        }
        switches.push(switch);
        penultimate = Some(std::mem::replace(&mut current, next));
    }
    Ok(RunOutput {
        outputs,
        switches,
        penultimate,
        last: current,
    })
}

pub(crate) fn lift_input(spec: &ModelSpec, input: &Tensor) -> Result<Tensor> {
    if input.shape() != spec.input_shape {
        return Err(Error::InvalidShape(format!(
            "input shape {:?} does not match model input {:?}",
            input.shape(),
            spec.input_shape
        )));
    }
    input
        .clone()
        .reshaped(&[1, spec.input_shape[0], spec.input_shape[1]])
}

/// Inference pass over a classifier stack: dropout is identity.
///
/// Returns pre-softmax logits, probabilities, and the trace when requested.
pub fn forward(
    spec: &ModelSpec,
    weights: &Weights,
    input: &Tensor,
    record_trace: bool,
) -> Result<(Vec<f64>, Vec<f64>, Option<ForwardTrace>)> {
    let n = spec.layers.len();
    if n < 2 || !matches!(spec.layers[n - 1], LayerSpec::Softmax) {
        return Err(Error::InvalidConfig(
            "classifier stack must end in softmax".into(),
        ));
    }
    let input3 = lift_input(spec, input)?;
    let run = run_layers(spec, weights, &input3, record_trace, None)?;
    let logits = match (&run.penultimate, run.outputs.get(n - 2)) {
        (_, Some(t)) => t.data().to_vec(),
        (Some(t), None) => t.data().to_vec(),
        (None, None) => unreachable!("stack has at least two layers"),
    };
    let probabilities = run.last.data().to_vec();
    let trace = record_trace.then(|| ForwardTrace {
        outputs: run.outputs,
        switches: run.switches,
        logits: logits.clone(),
        probabilities: probabilities.clone(),
    });
    Ok((logits, probabilities, trace))
}
