use serde::{Deserialize, Serialize};

use super::common::squared_distance;
use super::Dataset;

/// k-nearest-neighbour vote. Posterior is the fraction of the `k` nearest
/// training points (Euclidean) carrying each label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    k: usize,
    dim: usize,
    classes: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl KnnModel {
    pub(crate) fn fit(data: &Dataset, k: usize) -> Self {
        Self {
            k,
            dim: data.dim(),
            classes: data.n_classes(),
            features: data.features().to_vec(),
            labels: data.labels().to_vec(),
        }
    }

    /// Distance ties resolve by training order. If the query coincides with
    /// training points, only those points (at most `k`) vote.
    pub(crate) fn posterior(&self, x: &[f64]) -> Vec<f64> {
        let mut neighbours: Vec<(f64, usize)> = self
            .features
            .chunks_exact(self.dim)
            .enumerate()
            .map(|(i, row)| (squared_distance(row, x), i))
            .collect();
        let k = self.k.min(neighbours.len());
        let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < neighbours.len() {
            neighbours.select_nth_unstable_by(k - 1, by_distance);
            neighbours.truncate(k);
        }
        neighbours.sort_unstable_by(by_distance);

        let exact = neighbours.iter().take_while(|(d, _)| *d == 0.0).count();
        let voters = if exact > 0 { &neighbours[..exact] } else { &neighbours[..] };
        let mut votes = vec![0.0; self.classes];
        for &(_, i) in voters {
            votes[self.labels[i]] += 1.0;
        }
        let total = voters.len() as f64;
        votes.iter_mut().for_each(|v| *v /= total);
        votes
    }
}
