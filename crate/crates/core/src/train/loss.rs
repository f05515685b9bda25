//! Softmax cross-entropy computed stably from logits.

use crate::error::{Error, Result};

/// Loss `−log p_label` and its gradient at the logits,
/// `softmax(logits) − onehot(label)`.
///
/// Works on logits rather than probabilities so large scores cannot
/// overflow or round to log(0).
pub fn cross_entropy(logits: &[f64], label: u8) -> Result<(f64, Vec<f64>)> {
    let idx = label as usize;
    if idx >= logits.len() {
        return Err(Error::InvalidDataset(format!(
            "label {label} out of range for {} logits",
            logits.len()
        )));
    }
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum_exp: f64 = logits.iter().map(|&l| (l - m).exp()).sum();
    let loss = m + sum_exp.ln() - logits[idx];
    let mut grad: Vec<f64> = logits.iter().map(|&l| (l - m).exp() / sum_exp).collect();
    grad[idx] -= 1.0;
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_odds_cost_ln_two() {
        let (loss, _) = cross_entropy(&[0.3, 0.3], 1).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_prediction_costs_nothing() {
        let (loss, _) = cross_entropy(&[40.0, -40.0], 0).unwrap();
        assert!(loss >= 0.0 && loss < 1e-12);
    }

    #[test]
    fn extreme_logits_stay_finite() {
        let (loss, grad) = cross_entropy(&[1000.0, -1000.0], 1).unwrap();
        assert!(loss.is_finite() && loss > 100.0);
        assert!(grad.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let logits = [0.7, -0.4];
        let (_, grad) = cross_entropy(&logits, 0).unwrap();
        let h = 1e-7;
        for i in 0..2 {
            let mut plus = logits;
            plus[i] += h;
            let mut minus = logits;
            minus[i] -= h;
            let fd = (cross_entropy(&plus, 0).unwrap().0 - cross_entropy(&minus, 0).unwrap().0)
                / (2.0 * h);
            assert!((fd - grad[i]).abs() / (fd.abs() + 1e-8) < 1e-6);
        }
    }

    #[test]
    fn out_of_range_label_is_rejected() {
        assert!(cross_entropy(&[0.0, 0.0], 2).is_err());
    }
}
