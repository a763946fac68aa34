use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_lengths(predictions: &[usize], truth: &[usize]) -> Result<()> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch { expected: truth.len(), actual: predictions.len() });
    }
    if truth.is_empty() {
        return Err(Error::InvalidParameter("no observations to score".into()));
    }
    Ok(())
}

/// Fraction of misclassified observations.
pub fn error_rate(predictions: &[usize], truth: &[usize]) -> Result<f64> {
    check_lengths(predictions, truth)?;
    let wrong = predictions.iter().zip(truth).filter(|(p, t)| p != t).count();
    Ok(wrong as f64 / truth.len() as f64)
}

/// Macro-averaged one-vs-rest F1 over `classes` classes.
///
/// A class with `precision + recall = 0` (including one that is never
/// predicted and never present) contributes 0 to the average.
pub fn macro_f1(predictions: &[usize], truth: &[usize], classes: usize) -> Result<f64> {
    check_lengths(predictions, truth)?;
    if classes == 0 {
        return Err(Error::InvalidParameter("macro F1 needs at least one class".into()));
    }
    let mut tp = vec![0usize; classes];
    let mut fp = vec![0usize; classes];
    let mut fn_ = vec![0usize; classes];
    for (&p, &t) in predictions.iter().zip(truth) {
        if p >= classes || t >= classes {
            return Err(Error::IndexOutOfRange { index: p.max(t), len: classes });
        }
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    let total: f64 = (0..classes)
        .map(|c| {
            let precision = if tp[c] + fp[c] > 0 { tp[c] as f64 / (tp[c] + fp[c]) as f64 } else { 0.0 };
            let recall = if tp[c] + fn_[c] > 0 { tp[c] as f64 / (tp[c] + fn_[c]) as f64 } else { 0.0 };
            if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            }
        })
        .sum();
    Ok(total / classes as f64)
}

/// 0-1 loss bias and variance of a combined hypothesis over a set `S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasVarianceReport {
    /// Fraction of `S` the combined hypothesis gets wrong.
    pub bias: f64,
    /// Mean disagreement rate between the combined hypothesis and each base hypothesis.
    pub variance: f64,
}

pub fn bias_variance(
    combined: &[usize],
    per_classifier: &[Vec<usize>],
    truth: &[usize],
) -> Result<BiasVarianceReport> {
    check_lengths(combined, truth)?;
    if per_classifier.is_empty() {
        return Err(Error::InvalidParameter("bias/variance needs at least one base hypothesis".into()));
    }
    if let Some(h) = per_classifier.iter().find(|h| h.len() != truth.len()) {
        return Err(Error::LengthMismatch { expected: truth.len(), actual: h.len() });
    }
    let s = truth.len() as f64;
    let bias = error_rate(combined, truth)?;
    let disagreements: usize = per_classifier
        .iter()
        .map(|h| h.iter().zip(combined).filter(|(a, b)| a != b).count())
        .sum();
    Ok(BiasVarianceReport { bias, variance: disagreements as f64 / (s * per_classifier.len() as f64) })
}

/// Mean and unbiased sample variance (`n - 1` denominator, 0 for `n < 2`).
pub fn mean_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn error_rate_examples() {
        assert_eq!(error_rate(&[0, 1, 2], &[0, 1, 2]).unwrap(), 0.0);
        assert_eq!(error_rate(&[1, 0], &[0, 1]).unwrap(), 1.0);
        let truth = vec![0; 100];
        let pred: Vec<usize> = (0..100).map(|i| usize::from(i < 25)).collect();
        assert_eq!(error_rate(&pred, &truth).unwrap(), 0.25);
        assert!(error_rate(&[0], &[0, 1]).is_err());
        assert!(error_rate(&[], &[]).is_err());
    }

    #[test]
    fn macro_f1_examples() {
        assert_eq!(macro_f1(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap(), 1.0);
        // Class 0: TP 2, FP 1, FN 1; class 1 mirrored.
        let truth = [0, 0, 0, 1, 1, 1];
        let pred = [0, 0, 1, 1, 1, 0];
        assert_relative_eq!(macro_f1(&pred, &truth, 2).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        // Never predicting class 1: class 0 has P = 1/2, R = 1, F1 = 2/3.
        let f1 = macro_f1(&[0, 0, 0, 0], &[0, 0, 1, 1], 2).unwrap();
        assert_relative_eq!(f1, (2.0 / 3.0) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn bias_variance_examples() {
        let r = bias_variance(&[0, 1], &[vec![0, 1], vec![0, 1]], &[0, 1]).unwrap();
        assert_eq!((r.bias, r.variance), (0.0, 0.0));
        let r = bias_variance(&[0, 0, 0, 1], &[vec![0, 0, 0, 0]], &[0, 0, 0, 0]).unwrap();
        assert_eq!(r.bias, 0.25);
        // Four indicator terms, one disagreement.
        let r = bias_variance(&[0, 1], &[vec![0, 1], vec![0, 0]], &[0, 1]).unwrap();
        assert_eq!(r.variance, 0.25);
        assert!(bias_variance(&[0, 1], &[vec![0]], &[0, 1]).is_err());
    }

    #[test]
    fn mean_variance_examples() {
        assert_eq!(mean_variance(&[1.0, 3.0]), (2.0, 2.0));
        assert_eq!(mean_variance(&[5.0]), (5.0, 0.0));
    }
}
