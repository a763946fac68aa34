use serde::{Deserialize, Serialize};

use super::common::{present_classes, softmax_present};
use super::Dataset;

pub(crate) const VARIANCE_FLOOR: f64 = 1e-9;

/// Gaussian naive Bayes with add-one smoothed priors and a variance floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    present: Vec<bool>,
    log_prior: Vec<f64>,
    mean: Vec<Vec<f64>>,
    var: Vec<Vec<f64>>,
}

impl NaiveBayesModel {
    pub(crate) fn fit(data: &Dataset) -> Self {
        let m = data.n_classes();
        let d = data.dim();
        let counts = data.class_counts();
        let present = present_classes(data);
        let n_present = present.iter().filter(|&&p| p).count();

        let mut mean = vec![vec![0.0; d]; m];
        for (row, &y) in data.rows().zip(data.labels()) {
            for (s, &x) in mean[y].iter_mut().zip(row) {
                *s += x;
            }
        }
        for (mu, &c) in mean.iter_mut().zip(&counts) {
            if c > 0 {
                mu.iter_mut().for_each(|v| *v /= c as f64);
            }
        }
        let mut var = vec![vec![0.0; d]; m];
        for (row, &y) in data.rows().zip(data.labels()) {
            for ((s, &x), &mu) in var[y].iter_mut().zip(row).zip(&mean[y]) {
                *s += (x - mu) * (x - mu);
            }
        }
        for (v, &c) in var.iter_mut().zip(&counts) {
            v.iter_mut()
                .for_each(|s| *s = if c > 0 { (*s / c as f64).max(VARIANCE_FLOOR) } else { 1.0 });
        }

        let denom = (data.len() + n_present) as f64;
        let log_prior = counts
            .iter()
            .map(|&c| ((c + 1) as f64 / denom).ln())
            .collect();
        Self { present, log_prior, mean, var }
    }

    pub(crate) fn posterior(&self, x: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = (0..self.present.len())
            .map(|c| {
                if !self.present[c] {
                    return 0.0;
                }
                let ll: f64 = x
                    .iter()
                    .zip(&self.mean[c])
                    .zip(&self.var[c])
                    .map(|((&x, &mu), &v)| {
                        -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (x - mu) * (x - mu) / (2.0 * v)
                    })
                    .sum();
                self.log_prior[c] + ll
            })
            .collect();
        softmax_present(&logits, &self.present)
    }
}
