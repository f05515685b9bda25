//! Adamax optimizer: first moment plus infinity-norm second moment, with
//! decoupled multiplicative weight decay.

use crate::error::{Error, Result};
use crate::nn::Weights;
use crate::train::TrainConfig;

/// Per-parameter optimizer state.
#[derive(Debug, Clone)]
pub struct AdamaxState {
    m: Weights,
    u: Weights,
    t: u64,
}

impl AdamaxState {
    /// Zero state matching the structure of `params`.
    pub fn for_params(params: &Weights) -> Self {
        let mut zero = params.clone();
        for buf in zero.buffers_mut() {
            buf.fill(0.0);
        }
        AdamaxState {
            m: zero.clone(),
            u: zero,
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// Exponential moving average of gradients.
    pub fn first_moment(&self) -> &Weights {
        &self.m
    }

    /// Elementwise running max of gradient magnitudes.
    pub fn infinity_norm(&self) -> &Weights {
        &self.u
    }
}

/// One update:
/// `m ← β1·m + (1−β1)·g`, `u ← max(β2·u, |g|)`,
/// `θ ← θ·(1−lr·decay) − (lr/(1−β1^t))·m/(u+ε)`.
///
/// Decay multiplies the parameters before the gradient step.
pub fn adamax_step(
    params: &mut Weights,
    grads: &Weights,
    state: &mut AdamaxState,
    config: &TrainConfig,
) -> Result<()> {
    if !params.same_structure(grads) || !params.same_structure(&state.m) {
        return Err(Error::ShapeMismatch(
            "parameters, gradients, and state must share one structure".into(),
        ));
    }
    state.t += 1;
    let step = config.learning_rate / (1.0 - config.beta1.powi(state.t as i32));
    let shrink = 1.0 - config.learning_rate * config.weight_decay;
    let mut pb = params.buffers_mut();
    let gb = grads.buffers();
    let mut mb = state.m.buffers_mut();
    let mut ub = state.u.buffers_mut();
    for (((p, g), m), u) in pb.iter_mut().zip(&gb).zip(mb.iter_mut()).zip(ub.iter_mut()) {
        for i in 0..p.len() {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            u[i] = (config.beta2 * u[i]).max(g[i].abs());
            p[i] = p[i] * shrink - step * m[i] / (u[i] + config.epsilon);
        }
    }
    Ok(())
}
