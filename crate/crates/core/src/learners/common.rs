//! Helpers shared by the learners.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::Dataset;

/// Which catalog classes have at least one training observation.
pub(crate) fn present_classes(data: &Dataset) -> Vec<bool> {
    data.class_counts().iter().map(|&c| c > 0).collect()
}

/// Softmax over the present classes; absent classes get 0.
pub(crate) fn softmax_present(logits: &[f64], present: &[bool]) -> Vec<f64> {
    let max = logits
        .iter()
        .zip(present)
        .filter(|(_, &p)| p)
        .map(|(&l, _)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits
        .iter()
        .zip(present)
        .map(|(&l, &p)| if p { (l - max).exp() } else { 0.0 })
        .collect();
    normalize_present(weights, present)
}

/// Scale non-negative weights to sum 1 over the present classes. Degenerate
/// input (all zero or non-finite) becomes uniform over the present classes.
pub(crate) fn normalize_present(mut weights: Vec<f64>, present: &[bool]) -> Vec<f64> {
    for (w, &p) in weights.iter_mut().zip(present) {
        if !p || !w.is_finite() || *w < 0.0 {
            *w = if p && w.is_infinite() && *w > 0.0 { 1.0 } else { 0.0 };
        }
    }
    let sum: f64 = weights.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        weights.iter_mut().for_each(|w| *w /= sum);
        weights
    } else {
        let n = present.iter().filter(|&&p| p).count().max(1) as f64;
        present.iter().map(|&p| if p { 1.0 / n } else { 0.0 }).collect()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-feature z-scoring. Constant features keep unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub(crate) fn fit(data: &Dataset) -> Self {
        let n = data.len().max(1) as f64;
        let d = data.dim();
        let mut mean = vec![0.0; d];
        for row in data.rows() {
            for (m, &x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in data.rows() {
            for ((v, &x), &m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var
            .iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub(crate) fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((&x, &m), &s)| (x - m) / s)
            .collect()
    }

    pub(crate) fn transform_dataset(&self, data: &Dataset) -> Vec<Vec<f64>> {
        data.rows().map(|r| self.transform(r)).collect()
    }
}

/// Per-class means over the given rows.
pub(crate) fn class_means(rows: &[Vec<f64>], labels: &[usize], classes: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; classes];
    let mut counts = vec![0usize; classes];
    for (row, &y) in rows.iter().zip(labels) {
        counts[y] += 1;
        for (s, &x) in sums[y].iter_mut().zip(row) {
            *s += x;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    sums
}

/// Invert a symmetric scatter matrix after adding `1e-6 * trace / d` to the
/// diagonal. Falls back to a larger ridge if the factorisation still fails.
pub(crate) fn ridge_inverse(mut scatter: DMatrix<f64>) -> DMatrix<f64> {
    let d = scatter.nrows();
    let trace = scatter.trace();
    let mut ridge = if trace > 0.0 { 1e-6 * trace / d as f64 } else { 1e-6 };
    for _ in 0..8 {
        let mut m = scatter.clone();
        for i in 0..d {
            m[(i, i)] += ridge;
        }
        if let Some(ch) = m.cholesky() {
            return ch.inverse();
        }
        ridge *= 100.0;
    }
    for i in 0..d {
        scatter[(i, i)] += ridge;
    }
    scatter.try_inverse().unwrap_or_else(|| DMatrix::identity(d, d))
}

pub(crate) fn to_vector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
