//! Linear discriminants on standardised features.
//!
//! Both learners regularise scatter matrices with a `1e-6 * trace / d`
//! ridge so singular within-class scatter never aborts a fit.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::common::{class_means, dot, present_classes, ridge_inverse, sigmoid, softmax_present, to_vector, Standardizer};
use super::Dataset;

fn scatter(rows: &[Vec<f64>], labels: &[usize], means: &[Vec<f64>], keep: impl Fn(usize) -> usize) -> DMatrix<f64> {
    let d = rows.first().map_or(0, Vec::len);
    let mut s = DMatrix::zeros(d, d);
    for (row, &y) in rows.iter().zip(labels) {
        let mu = &means[keep(y)];
        let diff = to_vector(&row.iter().zip(mu).map(|(x, m)| x - m).collect::<Vec<_>>());
        s.ger(1.0, &diff, &diff, 1.0);
    }
    s
}

/// Gaussian LDA: shared covariance, per-class means, empirical priors.
/// Posterior is the softmax of the linear discriminant scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    standardizer: Standardizer,
    present: Vec<bool>,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl LdaModel {
    pub(crate) fn fit(data: &Dataset) -> Self {
        let standardizer = Standardizer::fit(data);
        let rows = standardizer.transform_dataset(data);
        let m = data.n_classes();
        let d = data.dim();
        let counts = data.class_counts();
        let present = present_classes(data);
        let n_present = present.iter().filter(|&&p| p).count();
        let means = class_means(&rows, data.labels(), m, d);

        let dof = data.len().saturating_sub(n_present).max(1) as f64;
        let cov = scatter(&rows, data.labels(), &means, |y| y) / dof;
        let precision = ridge_inverse(cov);

        let n = data.len() as f64;
        let mut weights = Vec::with_capacity(m);
        let mut bias = Vec::with_capacity(m);
        for c in 0..m {
            let w = &precision * to_vector(&means[c]);
            let w: Vec<f64> = w.iter().copied().collect();
            let b = if counts[c] > 0 {
                -0.5 * dot(&w, &means[c]) + (counts[c] as f64 / n).ln()
            } else {
                0.0
            };
            weights.push(w);
            bias.push(b);
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

/// One-vs-rest Fisher discriminants.
///
/// For class `c` the direction is `S_w^-1 (mu_c - mu_rest)` with the
/// threshold halfway between the projected means. The score is divided by
/// the pooled projected standard deviation and squashed with a logistic;
/// the per-class sigmoids are then normalised to a soft label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherModel {
    standardizer: Standardizer,
    present: Vec<bool>,
    directions: Vec<Vec<f64>>,
    thresholds: Vec<f64>,
    scales: Vec<f64>,
}

impl FisherModel {
    pub(crate) fn fit(data: &Dataset) -> Self {
        let standardizer = Standardizer::fit(data);
        let rows = standardizer.transform_dataset(data);
        let m = data.n_classes();
        let d = data.dim();
        let present = present_classes(data);
        let dof = data.len().saturating_sub(2).max(1) as f64;

        let mut directions = vec![vec![0.0; d]; m];
        let mut thresholds = vec![0.0; m];
        let mut scales = vec![1.0; m];
        for c in (0..m).filter(|&c| present[c]) {
            let binary: Vec<usize> = data.labels().iter().map(|&y| usize::from(y != c)).collect();
            if !binary.contains(&1) {
                continue;
            }
            let means = class_means(&rows, &binary, 2, d);
            let sw = scatter(&rows, &binary, &means, |y| y) / dof;
            let diff: Vec<f64> = means[0].iter().zip(&means[1]).map(|(a, b)| a - b).collect();
            let w = &ridge_inverse(sw.clone()) * to_vector(&diff);
            let spread = w.dot(&(&sw * &w)).sqrt();
            let w: Vec<f64> = w.iter().copied().collect();
            let mid: Vec<f64> = means[0].iter().zip(&means[1]).map(|(a, b)| (a + b) / 2.0).collect();
            thresholds[c] = dot(&w, &mid);
            scales[c] = if spread > 1e-12 && spread.is_finite() { spread } else { 1.0 };
            directions[c] = w;
        }
        Self { standardizer, present, directions, thresholds, scales }
    }

    pub(crate) fn posterior(&self, x: &[f64]) -> Vec<f64> {
        let z = self.standardizer.transform(x);
        if self.present.iter().filter(|&&p| p).count() == 1 {
            return self.present.iter().map(|&p| if p { 1.0 } else { 0.0 }).collect();
        }
        let weights: Vec<f64> = (0..self.present.len())
            .map(|c| sigmoid((dot(&self.directions[c], &z) - self.thresholds[c]) / self.scales[c]))
            .collect();
        super::common::normalize_present(weights, &self.present)
    }
}
