//! Seeded generator of two-class channels x time datasets: pink-ish
//! background noise plus class-specific narrowband oscillations with
//! per-subject phase and per-sample frequency jitter.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::seeds;
use crate::tensor::Tensor;
use crate::train::LabeledDataset;

const SALT_SUBJECT: u64 = 0x10;
const SALT_NOISE: u64 = 0x11;
const SALT_FREQ: u64 = 0x12;

/// One narrowband oscillation planted into every sample of a class.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedComponent {
    pub center_hz: f64,
    /// Per-sample frequency is drawn uniformly within this width around the
    /// center.
    pub bandwidth_hz: f64,
    pub amplitude: f64,
    /// Per-channel gain, one entry per channel.
    pub channel_weights: Vec<f64>,
}

/// Full description of a synthetic two-class dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub channels: usize,
    pub time: usize,
    pub fs: f64,
    pub subjects_per_class: usize,
    pub samples_per_subject: usize,
    /// Background noise follows 1/f^alpha.
    pub alpha: f64,
    pub class_components: [Vec<PlantedComponent>; 2],
    pub rng_seed: u64,
}

impl SynthSpec {
    /// Conventional defaults: 24 channels, 2 s at 128 Hz, 40 samples per
    /// subject, pink background, a strong 7 Hz component on the front half
    /// of the channels for class 0 and a weaker 10 Hz component on the back
    /// half for class 1.
    pub fn new(subjects_per_class: usize, rng_seed: u64) -> Self {
        let channels = 24;
        let front: Vec<f64> = (0..channels)
            .map(|c| if c < channels / 2 { 1.0 } else { 0.2 })
            .collect();
        let back: Vec<f64> = (0..channels)
            .map(|c| if c < channels / 2 { 0.2 } else { 1.0 })
            .collect();
        SynthSpec {
            channels,
            time: 256,
            fs: 128.0,
            subjects_per_class,
            samples_per_subject: 40,
            alpha: 1.0,
            class_components: [
                vec![PlantedComponent {
                    center_hz: 7.0,
                    bandwidth_hz: 2.0,
                    amplitude: 1.2,
                    channel_weights: front,
                }],
                vec![PlantedComponent {
                    center_hz: 10.0,
                    bandwidth_hz: 2.0,
                    amplitude: 0.6,
                    channel_weights: back,
                }],
            ],
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.time < 4 {
            return Err(Error::InvalidConfig(format!(
                "{} channels x {} time points is too small",
                self.channels, self.time
            )));
        }
        if !(self.fs > 0.0) {
            return Err(Error::InvalidConfig(format!("sampling rate {} Hz", self.fs)));
        }
        if self.subjects_per_class == 0 || self.samples_per_subject == 0 {
            return Err(Error::InvalidConfig(
                "need at least one subject and one sample per subject".into(),
            ));
        }
        if self.alpha < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "noise exponent {} is negative",
                self.alpha
            )));
        }
        for class in &self.class_components {
            for comp in class {
                if comp.center_hz >= self.fs / 2.0 || comp.center_hz <= 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "planted frequency {} Hz outside (0, Nyquist)",
                        comp.center_hz
                    )));
                }
                if comp.amplitude < 0.0 || comp.bandwidth_hz < 0.0 {
                    return Err(Error::InvalidConfig(
                        "planted amplitude and bandwidth must be >= 0".into(),
                    ));
                }
                if comp.channel_weights.len() != self.channels {
                    return Err(Error::InvalidConfig(format!(
                        "{} channel weights for {} channels",
                        comp.channel_weights.len(),
                        self.channels
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Gaussian noise shaped to a 1/f^alpha spectrum, normalized to zero mean
/// and unit variance per channel.
pub fn one_over_f_noise(channels: usize, time: usize, fs: f64, alpha: f64, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(time);
    let mut out = Tensor::zeros(&[channels, time]);
    let mut spectrum = vec![Complex::new(0.0, 0.0); time];
    for c in 0..channels {
        spectrum.iter_mut().for_each(|v| *v = Complex::new(0.0, 0.0));
        for k in 1..=time / 2 {
            let f = k as f64 * fs / time as f64;
            let scale = f.powf(-alpha / 2.0);
            let re: f64 = rng.sample(StandardNormal);
            if 2 * k == time {
                spectrum[k] = Complex::new(re * scale, 0.0);
            } else {
                let im: f64 = rng.sample(StandardNormal);
                spectrum[k] = Complex::new(re * scale, im * scale);
                spectrum[time - k] = spectrum[k].conj();
            }
        }
        let mut buffer = spectrum.clone();
        ifft.process(&mut buffer);
        let row = out.row_mut(c);
        for (x, v) in row.iter_mut().zip(&buffer) {
            *x = v.re;
        }
        let mean = row.iter().sum::<f64>() / time as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / time as f64;
        if var > 0.0 {
            let inv = 1.0 / var.sqrt();
            row.iter_mut().for_each(|v| *v = (*v - mean) * inv);
        }
    }
    out
}

/// Generates the dataset described by `spec`, deterministically in its seed.
///
/// Subject ids are contiguous: class 0 gets `0..n`, class 1 gets `n..2n`.
/// Each subject draws one phase per planted component; each sample draws its
/// component frequencies within the component bandwidth and fresh background
/// noise.
pub fn generate(spec: &SynthSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let n = spec.subjects_per_class;
    let per_subject: Vec<(u32, u8, Vec<Tensor>)> = (0..2 * n)
        .into_par_iter()
        .map(|subject| {
            let class = usize::from(subject >= n);
            let subject_seed = seeds::derive2(spec.rng_seed, SALT_SUBJECT, subject as u64);
            let mut srng = ChaCha8Rng::seed_from_u64(subject_seed);
            let components = &spec.class_components[class];
            let phases: Vec<f64> = components.iter().map(|_| srng.gen_range(0.0..TAU)).collect();
            let samples = (0..spec.samples_per_subject)
                .map(|i| {
                    let noise_seed = seeds::derive2(subject_seed, SALT_NOISE, i as u64);
                    let mut x =
                        one_over_f_noise(spec.channels, spec.time, spec.fs, spec.alpha, noise_seed);
                    let mut frng = ChaCha8Rng::seed_from_u64(seeds::derive2(
                        subject_seed,
                        SALT_FREQ,
                        i as u64,
                    ));
                    for (comp, phase) in components.iter().zip(&phases) {
                        let half = comp.bandwidth_hz / 2.0;
                        let freq = if half > 0.0 {
                            frng.gen_range(comp.center_hz - half..comp.center_hz + half)
                        } else {
                            comp.center_hz
                        };
                        for c in 0..spec.channels {
                            let gain = comp.amplitude * comp.channel_weights[c];
                            if gain == 0.0 {
                                continue;
                            }
                            let row = x.row_mut(c);
                            for (t, v) in row.iter_mut().enumerate() {
                                *v += gain * (TAU * freq * t as f64 / spec.fs + phase).sin();
                            }
                        }
                    }
                    x
                })
                .collect();
            (subject as u32, class as u8, samples)
        })
        .collect();
    let mut samples = Vec::with_capacity(2 * n * spec.samples_per_subject);
    let mut labels = Vec::with_capacity(samples.capacity());
    let mut subject_ids = Vec::with_capacity(samples.capacity());
    for (subject, label, subject_samples) in per_subject {
        for s in subject_samples {
            samples.push(s);
            labels.push(label);
            subject_ids.push(subject);
        }
    }
    LabeledDataset::new(samples, labels, subject_ids)
}
