//! Frequency-domain analysis: Welch power spectral density, peak detection,
//! group confidence intervals, band powers, and group difference spectra.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Power spectral density of one channels x time sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// Bin centers in Hz, strictly increasing from 0 to Nyquist.
    pub frequencies: Vec<f64>,
    /// One row per channel, in dB (10 log10 of the linear density).
    pub psd: Vec<Vec<f64>>,
    /// Mean of the per-channel dB rows.
    pub channel_mean: Vec<f64>,
    pub fs: f64,
    pub window_len: usize,
    pub overlap: f64,
}

/// One detected spectral peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub frequency: f64,
    pub height: f64,
}

/// Mean spectrum of a group of samples with a 95% confidence band.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpectrum {
    pub frequencies: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Number of spectra averaged.
    pub n: usize,
}

fn hamming(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

fn to_db(power: f64) -> f64 {
    10.0 * power.max(f64::MIN_POSITIVE).log10()
}

/// Welch PSD estimate: Hamming-windowed overlapping segments, averaged
/// one-sided periodograms normalized to density by `fs` and window power,
/// converted to dB per channel.
pub fn welch_psd(
    signal: &Tensor,
    fs: f64,
    window_len: usize,
    overlap: f64,
) -> Result<SpectrumResult> {
    let [channels, time] = match signal.shape() {
        [c, t] => [*c, *t],
        other => {
            return Err(Error::InvalidShape(format!(
                "expected a channels x time sample, got {other:?}"
            )))
        }
    };
    if !(fs > 0.0) {
        return Err(Error::InvalidConfig(format!("sampling rate {fs} Hz")));
    }
    if window_len < 2 {
        return Err(Error::InvalidConfig(format!(
            "window of {window_len} samples is too short"
        )));
    }
    if window_len > time {
        return Err(Error::WindowTooLong(format!(
            "window {window_len} exceeds signal length {time}"
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::InvalidConfig(format!(
            "overlap fraction {overlap} outside [0, 1)"
        )));
    }
    let step = (window_len - (window_len as f64 * overlap).floor() as usize).max(1);
    let window = hamming(window_len);
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let nbins = window_len / 2 + 1;
    let frequencies: Vec<f64> = (0..nbins)
        .map(|k| k as f64 * fs / window_len as f64)
        .collect();
    let nyquist_bin = if window_len % 2 == 0 {
        Some(nbins - 1)
    } else {
        None
    };
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(window_len);
    let mut buffer = vec![Complex::new(0.0, 0.0); window_len];
    let mut psd = Vec::with_capacity(channels);
    for c in 0..channels {
        let row = &signal.data()[c * time..(c + 1) * time];
        let mut accum = vec![0.0; nbins];
        let mut segments = 0usize;
        let mut start = 0;
        while start + window_len <= time {
            for (b, (x, w)) in buffer
                .iter_mut()
                .zip(row[start..start + window_len].iter().zip(&window))
            {
                *b = Complex::new(x * w, 0.0);
            }
            fft.process(&mut buffer);
            for (k, acc) in accum.iter_mut().enumerate() {
                let mut p = buffer[k].norm_sqr() / (fs * window_power);
                if k > 0 && Some(k) != nyquist_bin {
                    p *= 2.0;
                }
                *acc += p;
            }
            segments += 1;
            start += step;
        }
        let db: Vec<f64> = accum
            .iter()
            .map(|p| to_db(p / segments as f64))
            .collect();
        psd.push(db);
    }
    let channel_mean = (0..nbins)
        .map(|k| psd.iter().map(|row| row[k]).sum::<f64>() / channels as f64)
        .collect();
    Ok(SpectrumResult {
        frequencies,
        psd,
        channel_mean,
        fs,
        window_len,
        overlap,
    })
}

/// `welch_psd` with the conventional defaults: a one-second window and 50%
/// overlap.
pub fn welch_psd_default(signal: &Tensor, fs: f64) -> Result<SpectrumResult> {
    welch_psd(signal, fs, fs.round() as usize, 0.5)
}

/// Mean of the per-channel dB rows.
pub fn mean_spectrum(result: &SpectrumResult) -> Vec<f64> {
    result.channel_mean.clone()
}

/// Strict local maxima of `values` inside `[f_lo, f_hi]`, tallest first.
///
/// Axis endpoints and plateau bins never qualify; equal heights keep
/// ascending frequency order.
pub fn find_peaks(frequencies: &[f64], values: &[f64], f_lo: f64, f_hi: f64) -> Vec<Peak> {
    let mut peaks: Vec<Peak> = (1..values.len().saturating_sub(1))
        .filter(|&k| values[k] > values[k - 1] && values[k] > values[k + 1])
        .filter(|&k| frequencies[k] >= f_lo && frequencies[k] <= f_hi)
        .map(|k| Peak {
            frequency: frequencies[k],
            height: values[k],
        })
        .collect();
    peaks.sort_by(|a, b| b.height.partial_cmp(&a.height).expect("finite heights"));
    peaks
}

/// Per-bin mean of the given channel-mean spectra with a 95% Student-t
/// confidence band.
pub fn group_ci(frequencies: &[f64], spectra: &[Vec<f64>]) -> Result<GroupSpectrum> {
    let n = spectra.len();
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "confidence interval needs at least 2 spectra, got {n}"
        )));
    }
    for s in spectra {
        if s.len() != frequencies.len() {
            return Err(Error::MismatchedAxes(format!(
                "spectrum with {} bins on a {}-bin axis",
                s.len(),
                frequencies.len()
            )));
        }
    }
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("valid t distribution for n >= 2")
        .inverse_cdf(0.975);
    let bins = frequencies.len();
    let mut mean = vec![0.0; bins];
    let mut lower = vec![0.0; bins];
    let mut upper = vec![0.0; bins];
    for k in 0..bins {
        let m = spectra.iter().map(|s| s[k]).sum::<f64>() / n as f64;
        let var = spectra
            .iter()
            .map(|s| (s[k] - m) * (s[k] - m))
            .sum::<f64>()
            / (n - 1) as f64;
        let half = t * (var.sqrt() / (n as f64).sqrt());
        mean[k] = m;
        lower[k] = m - half;
        upper[k] = m + half;
    }
    Ok(GroupSpectrum {
        frequencies: frequencies.to_vec(),
        mean,
        lower,
        upper,
        n,
    })
}

/// Per-bin `mean_a - mean_b`, in dB.
pub fn class_difference(a: &GroupSpectrum, b: &GroupSpectrum) -> Result<Vec<f64>> {
    if a.frequencies != b.frequencies {
        return Err(Error::MismatchedAxes(
            "groups were computed on different frequency axes".into(),
        ));
    }
    Ok(a.mean.iter().zip(&b.mean).map(|(x, y)| x - y).collect())
}

/// Trapezoidal integral of the linear-scale PSD over `[f_lo, f_hi]`, one
/// value per channel, with linear interpolation at fractional band edges.
pub fn band_power(result: &SpectrumResult, f_lo: f64, f_hi: f64) -> Result<Vec<f64>> {
    let nyquist = *result
        .frequencies
        .last()
        .ok_or_else(|| Error::InvalidShape("empty frequency axis".into()))?;
    if !(0.0..=nyquist).contains(&f_lo) || !(0.0..=nyquist).contains(&f_hi) || f_lo > f_hi {
        return Err(Error::InvalidBand(format!(
            "band [{f_lo}, {f_hi}] Hz not within [0, {nyquist}] Hz"
        )));
    }
    let freqs = &result.frequencies;
    let value_at = |linear: &[f64], f: f64| -> f64 {
        let hi = freqs.partition_point(|x| *x < f);
        if hi == 0 {
            return linear[0];
        }
        if hi == freqs.len() {
            return linear[freqs.len() - 1];
        }
        let lo = hi - 1;
        if freqs[hi] == freqs[lo] {
            return linear[lo];
        }
        let frac = (f - freqs[lo]) / (freqs[hi] - freqs[lo]);
        linear[lo] + frac * (linear[hi] - linear[lo])
    };
    Ok(result
        .psd
        .iter()
        .map(|row| {
            let linear: Vec<f64> = row.iter().map(|db| 10f64.powf(db / 10.0)).collect();
            let mut points: Vec<(f64, f64)> = vec![(f_lo, value_at(&linear, f_lo))];
            for (f, p) in freqs.iter().zip(&linear) {
                if *f > f_lo && *f < f_hi {
                    points.push((*f, *p));
                }
            }
            points.push((f_hi, value_at(&linear, f_hi)));
            points
                .windows(2)
                .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn tone(freq: f64, fs: f64, len: usize) -> Tensor {
        Tensor::from_fn(&[1, len], |i| {
            (2.0 * std::f64::consts::PI * freq * i as f64 / fs).sin()
        })
    }

    fn gaussian_noise(seed: u64, channels: usize, len: usize) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::from_fn(&[channels, len], |_| rng.sample(StandardNormal))
    }

    #[test]
    fn tone_peak_lands_on_its_frequency() {
        let signal = tone(10.0, 128.0, 1280);
        let spec = welch_psd_default(&signal, 128.0).unwrap();
        let peak = spec
            .channel_mean
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!((spec.frequencies[peak] - 10.0).abs() <= 1.0);
        assert_eq!(spec.frequencies[0], 0.0);
        assert_eq!(*spec.frequencies.last().unwrap(), 64.0);
        assert!(spec.frequencies.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn constant_signal_concentrates_at_zero_hertz() {
        let signal = Tensor::from_vec(&[1, 256], vec![2.0; 256]).unwrap();
        let spec = welch_psd_default(&signal, 128.0).unwrap();
        let linear: Vec<f64> = spec.psd[0].iter().map(|db| 10f64.powf(db / 10.0)).collect();
        let total: f64 = linear.iter().sum();
        let argmax = linear
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(argmax, 0);
        // The window's mainlobe spreads a little power into the first bins;
        // everything beyond it is negligible.
        let tail: f64 = linear[3..].iter().sum();
        assert!(tail / total < 1e-3);
    }

    #[test]
    fn seeded_noise_is_flat_after_averaging() {
        // 50 half-overlapping one-second segments at fs 128.
        let signal = gaussian_noise(42, 1, 64 * 49 + 128);
        let spec = welch_psd_default(&signal, 128.0).unwrap();
        let band: Vec<f64> = spec.frequencies
            .iter()
            .zip(&spec.psd[0])
            .filter(|(f, _)| **f >= 1.0 && **f <= 30.0)
            .map(|(_, db)| 10f64.powf(db / 10.0))
            .collect();
        let max = band.iter().cloned().fold(f64::MIN, f64::max);
        let min = band.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min < 3.0, "flatness ratio {}", max / min);
    }

    #[test]
    fn noise_power_satisfies_parseval() {
        let signal = gaussian_noise(7, 1, 64 * 49 + 128);
        let spec = welch_psd_default(&signal, 128.0).unwrap();
        let df = spec.frequencies[1] - spec.frequencies[0];
        let integral: f64 = spec.psd[0]
            .iter()
            .map(|db| 10f64.powf(db / 10.0) * df)
            .sum();
        let mean_square: f64 =
            signal.data().iter().map(|v| v * v).sum::<f64>() / signal.len() as f64;
        assert!(
            (integral - mean_square).abs() / mean_square < 0.05,
            "integral {integral} vs mean square {mean_square}"
        );
    }

    #[test]
    fn amplitude_scaling_shifts_decibels_uniformly() {
        let signal = gaussian_noise(11, 2, 512);
        let scaled = signal.map(|v| 3.0 * v);
        let a = welch_psd_default(&signal, 128.0).unwrap();
        let b = welch_psd_default(&scaled, 128.0).unwrap();
        let shift = 20.0 * 3f64.log10();
        for (ra, rb) in a.psd.iter().zip(&b.psd) {
            for (x, y) in ra.iter().zip(rb) {
                assert!((y - x - shift).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn window_and_overlap_bounds_are_enforced() {
        let signal = Tensor::zeros(&[1, 100]);
        assert!(matches!(
            welch_psd(&signal, 128.0, 128, 0.5),
            Err(Error::WindowTooLong(_))
        ));
        assert!(matches!(
            welch_psd(&signal, 128.0, 64, 1.0),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            welch_psd(&signal, 128.0, 1, 0.5),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn monotone_spectrum_has_no_peaks() {
        let freqs: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let values: Vec<f64> = (0..10).map(|k| -(k as f64)).collect();
        assert!(find_peaks(&freqs, &values, 0.0, 9.0).is_empty());
    }

    #[test]
    fn plateaus_are_not_peaks() {
        let freqs: Vec<f64> = (0..5).map(|k| k as f64).collect();
        let values = vec![0.0, 1.0, 1.0, 0.5, 0.0];
        assert!(find_peaks(&freqs, &values, 0.0, 4.0).is_empty());
    }

    #[test]
    fn peaks_sort_by_height_and_lie_on_the_axis() {
        let freqs: Vec<f64> = (0..8).map(|k| k as f64).collect();
        let values = vec![0.0, 3.0, 0.0, 5.0, 0.0, 4.0, 0.0, 9.0];
        let peaks = find_peaks(&freqs, &values, 0.0, 7.0);
        let heights: Vec<f64> = peaks.iter().map(|p| p.height).collect();
        assert_eq!(heights, vec![5.0, 4.0, 3.0]);
        for p in &peaks {
            let k = freqs.iter().position(|f| *f == p.frequency).unwrap();
            assert_eq!(values[k], p.height);
        }
        let theta_only = find_peaks(&freqs, &values, 2.0, 4.0);
        assert_eq!(theta_only.len(), 1);
        assert_eq!(theta_only[0].frequency, 3.0);
    }

    #[test]
    fn tone_psd_has_one_dominant_peak() {
        let signal = tone(10.0, 128.0, 1280);
        let spec = welch_psd_default(&signal, 128.0).unwrap();
        let peaks = find_peaks(&spec.frequencies, &spec.channel_mean, 1.0, 60.0);
        assert!(!peaks.is_empty());
        assert!((peaks[0].frequency - 10.0).abs() <= 1.0);
        if peaks.len() > 1 {
            assert!(peaks[0].height > peaks[1].height + 10.0);
        }
    }

    #[test]
    fn identical_spectra_give_zero_width_interval() {
        let freqs = vec![0.0, 1.0, 2.0];
        let s = vec![vec![1.0, 2.0, 3.0]; 5];
        let g = group_ci(&freqs, &s).unwrap();
        assert_eq!(g.mean, vec![1.0, 2.0, 3.0]);
        assert_eq!(g.lower, g.mean);
        assert_eq!(g.upper, g.mean);
        assert_eq!(g.n, 5);
    }

    #[test]
    fn two_offset_spectra_give_a_symmetric_interval() {
        let freqs = vec![0.0, 1.0];
        let s = vec![vec![0.0, 10.0], vec![2.0, 12.0]];
        let g = group_ci(&freqs, &s).unwrap();
        // Half-width is t(0.975, 1 dof) * sd / sqrt(2) = 12.7062... * 1.
        let t1 = 12.706204736174698;
        for k in 0..2 {
            let mid = [1.0, 11.0][k];
            assert!((g.mean[k] - mid).abs() < 1e-12);
            assert!((g.upper[k] - (mid + t1)).abs() < 1e-9);
            assert!((g.lower[k] - (mid - t1)).abs() < 1e-9);
        }
    }

    #[test]
    fn interval_matches_an_independent_t_computation() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let freqs: Vec<f64> = (0..6).map(|k| k as f64).collect();
        let spectra: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..6).map(|_| rng.gen_range(-5.0..5.0)).collect())
            .collect();
        let g = group_ci(&freqs, &spectra).unwrap();
        // Tabulated two-sided 95% t quantile for 19 degrees of freedom.
        let t19 = 2.093024054408263;
        for k in 0..6 {
            let m = spectra.iter().map(|s| s[k]).sum::<f64>() / 20.0;
            let sd = (spectra.iter().map(|s| (s[k] - m).powi(2)).sum::<f64>() / 19.0).sqrt();
            let half = t19 * sd / 20f64.sqrt();
            assert!((g.mean[k] - m).abs() < 1e-12);
            assert!((g.upper[k] - (m + half)).abs() < 1e-9);
            assert!((g.lower[k] - (m - half)).abs() < 1e-9);
            assert!(g.lower[k] <= g.mean[k] && g.mean[k] <= g.upper[k]);
        }
    }

    #[test]
    fn interval_width_shrinks_with_group_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let freqs = vec![0.0];
        let mean_width = |n: usize, rng: &mut ChaCha8Rng| -> f64 {
            let mut total = 0.0;
            let reps = 300;
            for _ in 0..reps {
                let group: Vec<Vec<f64>> =
                    (0..n).map(|_| vec![rng.sample::<f64, _>(StandardNormal)]).collect();
                let g = group_ci(&freqs, &group).unwrap();
                total += g.upper[0] - g.lower[0];
            }
            total / reps as f64
        };
        let w5 = mean_width(5, &mut rng);
        let w20 = mean_width(20, &mut rng);
        // Width scales as t(n-1) / sqrt(n); for 5 vs 20 that predicts
        // (2.7764 / 2.0930) * 2 = 2.653.
        let predicted = 2.653;
        let ratio = w5 / w20;
        assert!(
            (ratio - predicted).abs() / predicted < 0.2,
            "width ratio {ratio}"
        );
    }

    #[test]
    fn group_ci_rejects_ragged_and_tiny_input() {
        let freqs = vec![0.0, 1.0];
        assert!(matches!(
            group_ci(&freqs, &[vec![1.0, 2.0]]),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            group_ci(&freqs, &[vec![1.0, 2.0], vec![1.0]]),
            Err(Error::MismatchedAxes(_))
        ));
    }

    #[test]
    fn difference_of_identical_groups_is_zero_and_antisymmetric() {
        let freqs = vec![0.0, 1.0, 2.0];
        let a = group_ci(&freqs, &[vec![1.0, 5.0, 2.0], vec![3.0, 1.0, 4.0]]).unwrap();
        let b = group_ci(&freqs, &[vec![0.0, 9.0, 1.0], vec![2.0, 3.0, 1.0]]).unwrap();
        let zero = class_difference(&a, &a).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
        let ab = class_difference(&a, &b).unwrap();
        let ba = class_difference(&b, &a).unwrap();
        for (x, y) in ab.iter().zip(&ba) {
            assert_eq!(*x, -*y);
        }
        let other_axis = GroupSpectrum {
            frequencies: vec![0.0, 1.0, 3.0],
            ..b.clone()
        };
        assert!(matches!(
            class_difference(&a, &other_axis),
            Err(Error::MismatchedAxes(_))
        ));
    }

    #[test]
    fn localized_group_gap_shows_up_only_in_its_bins() {
        let freqs: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let flat = vec![0.0; 10];
        let mut bumped = flat.clone();
        bumped[6] = 3.0;
        bumped[7] = 3.0;
        let a = group_ci(&freqs, &[bumped.clone(), bumped]).unwrap();
        let b = group_ci(&freqs, &[flat.clone(), flat]).unwrap();
        let diff = class_difference(&a, &b).unwrap();
        for (k, v) in diff.iter().enumerate() {
            if k == 6 || k == 7 {
                assert_eq!(*v, 3.0);
            } else {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn tone_band_power_recovers_tone_power() {
        let signal = tone(10.0, 128.0, 1280);
        let spec = welch_psd_default(&signal, 128.0).unwrap();
        // A unit-amplitude sinusoid carries power 1/2.
        let inside = band_power(&spec, 7.0, 13.0).unwrap()[0];
        assert!((inside - 0.5).abs() / 0.5 < 0.05, "in-band power {inside}");
        let outside = band_power(&spec, 20.0, 30.0).unwrap()[0];
        assert!(outside < 0.005, "out-of-band power {outside}");
        let empty = band_power(&spec, 10.0, 10.0).unwrap()[0];
        assert_eq!(empty, 0.0);
    }

    #[test]
    fn bands_outside_the_axis_are_rejected() {
        let spec = welch_psd_default(&tone(5.0, 128.0, 256), 128.0).unwrap();
        assert!(matches!(
            band_power(&spec, -1.0, 10.0),
            Err(Error::InvalidBand(_))
        ));
        assert!(matches!(
            band_power(&spec, 10.0, 100.0),
            Err(Error::InvalidBand(_))
        ));
        assert!(matches!(
            band_power(&spec, 12.0, 8.0),
            Err(Error::InvalidBand(_))
        ));
    }

    #[test]
    fn mean_spectrum_averages_channel_rows() {
        let mut signal = gaussian_noise(31, 2, 256);
        for v in signal.data_mut()[..256].iter_mut() {
            *v *= 2.0;
        }
        let spec = welch_psd_default(&signal, 128.0).unwrap();
        let mean = mean_spectrum(&spec);
        for k in 0..mean.len() {
            let want = (spec.psd[0][k] + spec.psd[1][k]) / 2.0;
            assert!((mean[k] - want).abs() < 1e-12);
        }
    }
}
