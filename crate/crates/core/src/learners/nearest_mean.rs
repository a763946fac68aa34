use serde::{Deserialize, Serialize};

use super::common::{present_classes, softmax_present, squared_distance};
use super::Dataset;

/// Nearest class mean in the raw feature space. Posterior is the softmin
/// of the Euclidean distances to the class means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestMeanModel {
    present: Vec<bool>,
    means: Vec<Vec<f64>>,
}

impl NearestMeanModel {
    pub(crate) fn fit(data: &Dataset) -> Self {
        let rows: Vec<Vec<f64>> = data.rows().map(<[f64]>::to_vec).collect();
        let means = super::common::class_means(&rows, data.labels(), data.n_classes(), data.dim());
        Self { present: present_classes(data), means }
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub(crate) fn posterior(&self, x: &[f64]) -> Vec<f64> {
        let neg_dist: Vec<f64> = self
            .means
            .iter()
            .map(|mu| -squared_distance(mu, x).sqrt())
            .collect();
        softmax_present(&neg_dist, &self.present)
    }
}
