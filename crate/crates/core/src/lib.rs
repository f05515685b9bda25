//! Interpretability toolkit for small convolutional classifiers over
//! channels-by-time signals: a from-scratch network runtime with trace
//! recording, activation-based sample ranking, regularized activation
//! maximization, deconvnet reconstruction, gradient saliency with quantile
//! masking, and the Welch spectral analysis used to read the results.

pub mod error;
pub mod interpret;
pub mod io;
pub mod nn;
pub mod seeds;
pub mod spectral;
pub mod synth;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use tensor::Tensor;
