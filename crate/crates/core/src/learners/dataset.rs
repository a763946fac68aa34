use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metadata::ClassCatalog;

/// Labelled observations: an `N x d` feature matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    name: String,
    dim: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
    catalog: ClassCatalog,
}

impl Dataset {
    /// Validated constructor: finite features, consistent widths, labels in
    /// range, and every catalog class observed at least once.
    pub fn new(
        name: impl Into<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        catalog: ClassCatalog,
    ) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::InvalidDataset("no features".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::InvalidDataset(format!(
                "row {i} has {} features, expected {dim}",
                rows[i].len()
            )));
        }
        Self::from_flat(name, dim, rows.concat(), labels, catalog)
    }

    pub fn from_flat(
        name: impl Into<String>,
        dim: usize,
        features: Vec<f64>,
        labels: Vec<usize>,
        catalog: ClassCatalog,
    ) -> Result<Self> {
        let name = name.into();
        if dim == 0 || features.len() != dim * labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} feature values cannot form {} rows of width {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite feature at row {}, column {}",
                i / dim,
                i % dim
            )));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= catalog.len()) {
            return Err(Error::IndexOutOfRange { index: y, len: catalog.len() });
        }
        let data = Self { name, dim, features, labels, catalog };
        if let Some(c) = data.class_counts().iter().position(|&c| c == 0) {
            return Err(Error::MissingClass {
                class: data.catalog.labels()[c].clone(),
                context: Some(format!("dataset '{}'", data.name)),
            });
        }
        Ok(data)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.catalog.len()
    }

    pub fn catalog(&self) -> &ClassCatalog {
        &self.catalog
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.dim)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.catalog.len()];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order. The result keeps the full catalog
    /// and may lack some classes.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Self {
            name: self.name.clone(),
            dim: self.dim,
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            catalog: self.catalog.clone(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog() -> ClassCatalog {
        ClassCatalog::new(["A", "B"]).unwrap()
    }

    #[test]
    fn rejects_non_finite_and_missing_classes() {
        assert!(Dataset::new("d", vec![vec![f64::NAN], vec![1.0]], vec![0, 1], catalog()).is_err());
        let err = Dataset::new("d", vec![vec![0.0], vec![1.0]], vec![0, 0], catalog()).unwrap_err();
        assert!(err.to_string().contains("'B'"));
        assert!(Dataset::new("d", vec![vec![0.0], vec![1.0]], vec![0, 2], catalog()).is_err());
        assert!(Dataset::new("d", vec![vec![0.0], vec![1.0, 2.0]], vec![0, 1], catalog()).is_err());
    }

    #[test]
    fn subset_preserves_order() {
        let d = Dataset::new("d", vec![vec![0.0], vec![1.0], vec![2.0]], vec![0, 1, 0], catalog()).unwrap();
        let s = d.subset(&[2, 0]);
        assert_eq!(s.features(), &[2.0, 0.0]);
        assert_eq!(s.labels(), &[0, 0]);
        assert_eq!(s.class_counts(), vec![2, 0]);
    }
}
