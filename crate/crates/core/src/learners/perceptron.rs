use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::common::{dot, normalize_present, present_classes, sigmoid, Standardizer};
use super::Dataset;
use crate::seed;

/// Averaged multiclass perceptron on standardised features. Training order
/// is reshuffled every epoch from the fit seed. The posterior normalises the
/// logistic squashing of each class score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptronModel {
    standardizer: Standardizer,
    present: Vec<bool>,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl PerceptronModel {
    pub(crate) fn fit(data: &Dataset, epochs: usize, learning_rate: f64, fit_seed: u64) -> Self {
        let standardizer = Standardizer::fit(data);
        let rows = standardizer.transform_dataset(data);
        let m = data.n_classes();
        let d = data.dim();
        let present = present_classes(data);
        let mut rng = seed::rng(fit_seed);

        let mut w = vec![vec![0.0; d]; m];
        let mut b = vec![0.0; m];
        let mut w_sum = vec![vec![0.0; d]; m];
        let mut b_sum = vec![0.0; m];
        let mut order: Vec<usize> = (0..rows.len()).collect();
        let mut steps = 0usize;
        for _ in 0..epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let x = &rows[i];
                let y = data.labels()[i];
                let predicted = (0..m)
                    .filter(|&c| present[c])
                    .map(|c| (c, dot(&w[c], x) + b[c]))
                    .fold((y, f64::NEG_INFINITY), |best, (c, s)| if s > best.1 { (c, s) } else { best });
                if predicted.0 != y {
                    for (wy, &xi) in w[y].iter_mut().zip(x) {
                        *wy += learning_rate * xi;
                    }
                    b[y] += learning_rate;
                    let p = predicted.0;
                    for (wp, &xi) in w[p].iter_mut().zip(x) {
                        *wp -= learning_rate * xi;
                    }
                    b[p] -= learning_rate;
                }
                for c in 0..m {
                    for (s, &v) in w_sum[c].iter_mut().zip(&w[c]) {
                        *s += v;
                    }
                    b_sum[c] += b[c];
                }
                steps += 1;
            }
        }
        let steps = steps.max(1) as f64;
        let weights = w_sum
            .into_iter()
            .map(|v| v.into_iter().map(|s| s / steps).collect())
            .collect();
        let bias = b_sum.into_iter().map(|s| s / steps).collect();
        Self { standardizer, present, weights, bias }
    }

    pub(crate) fn posterior(&self, x: &[f64]) -> Vec<f64> {
        let z = self.standardizer.transform(x);
        let weights = self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| sigmoid(dot(w, &z) + b))
            .collect();
        normalize_present(weights, &self.present)
    }
}
