use serde::{Deserialize, Serialize};

use super::common::{dot, present_classes, softmax_present, Standardizer};
use super::Dataset;

/// Multinomial logistic regression fitted by full-batch gradient ascent on
/// the mean log-likelihood, starting from zero weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    standardizer: Standardizer,
    present: Vec<bool>,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl LogisticModel {
    pub(crate) fn fit(data: &Dataset, iterations: usize, learning_rate: f64) -> Self {
        let standardizer = Standardizer::fit(data);
        let rows = standardizer.transform_dataset(data);
        let m = data.n_classes();
        let d = data.dim();
        let present = present_classes(data);
        let n = data.len() as f64;

        let mut weights = vec![vec![0.0; d]; m];
        let mut bias = vec![0.0; m];
        let mut grad_w = vec![vec![0.0; d]; m];
        let mut grad_b = vec![0.0; m];
        let mut logits = vec![0.0; m];
        for _ in 0..iterations {
            grad_w.iter_mut().for_each(|g| g.fill(0.0));
            grad_b.fill(0.0);
            for (row, &y) in rows.iter().zip(data.labels()) {
                for c in 0..m {
                    logits[c] = dot(&weights[c], row) + bias[c];
                }
                let p = softmax_present(&logits, &present);
                for c in (0..m).filter(|&c| present[c]) {
                    let err = f64::from(u8::from(c == y)) - p[c];
                    grad_b[c] += err;
                    for (g, &x) in grad_w[c].iter_mut().zip(row) {
                        *g += err * x;
                    }
                }
            }
            for c in 0..m {
                bias[c] += learning_rate * grad_b[c] / n;
                for (w, g) in weights[c].iter_mut().zip(&grad_w[c]) {
                    *w += learning_rate * g / n;
                }
            }
        }
        Self { standardizer, present, weights, bias }
    }

    pub(crate) fn posterior(&self, x: &[f64]) -> Vec<f64> {
        let z = self.standardizer.transform(x);
        let logits: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| dot(w, &z) + b)
            .collect();
        softmax_present(&logits, &self.present)
    }
}
