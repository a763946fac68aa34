//! Soft-label meta-data.
//!
//! A [`MetaProfile`] is the `K x M` matrix of posteriors that `K` base
//! classifiers emit for one observation; row `k` is classifier `k`'s
//! soft label, column `m` collects every classifier's support for class `m`.
//! A [`MetaMatrix`] stacks `N` profiles, one per observation, and flattens
//! to `N x MK` classifier-major for export.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::granule::Sample;

/// Absolute tolerance on entry range and row sums.
pub const ROW_TOLERANCE: f64 = 1e-9;

/// Ordered, unique class names. Order is fixed for the lifetime of an experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ClassCatalog {
    labels: Vec<String>,
}

impl ClassCatalog {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a class catalog needs at least 2 classes, got {}",
                labels.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::InvalidParameter(format!("duplicate class label '{dup}'")));
        }
        Ok(Self { labels })
    }

    /// Catalog `y1, ..., yM`.
    pub fn numbered(m: usize) -> Result<Self> {
        Self::new((1..=m).map(|i| format!("y{i}")))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

impl TryFrom<Vec<String>> for ClassCatalog {
    type Error = Error;

    fn try_from(labels: Vec<String>) -> Result<Self> {
        Self::new(labels)
    }
}

impl From<ClassCatalog> for Vec<String> {
    fn from(c: ClassCatalog) -> Self {
        c.labels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    Width { expected: usize, actual: usize },
    NonFinite { column: usize },
    OutOfRange { column: usize, value: f64 },
    SumDeviation { sum: f64 },
}

/// A soft-label row that breaks the `[0, 1]` / sums-to-one contract.
#[derive(Debug, Clone, PartialEq)]
pub struct RowViolation {
    pub row: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for RowViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ViolationKind::Width { expected, actual } => {
                write!(f, "row {}: width {actual}, expected {expected}", self.row)
            }
            ViolationKind::NonFinite { column } => {
                write!(f, "row {}: non-finite entry in column {column}", self.row)
            }
            ViolationKind::OutOfRange { column, value } => {
                write!(f, "row {}: entry {value} in column {column} outside [0,1]", self.row)
            }
            ViolationKind::SumDeviation { sum } => write!(f, "row {}: sum {sum} != 1", self.row),
        }
    }
}

/// Check soft-label rows, repairing sub-tolerance drift in place.
///
/// Rows with an entry outside `[-tol, 1 + tol]` or a sum off by more than
/// `tol` are reported. Rows inside tolerance are clamped to `[0, 1]` and, if
/// anything was clamped or the sum is off by more than a few ulps,
/// renormalised. Already-normalised rows are left bit-for-bit untouched.
pub fn validate(rows: &mut [Vec<f64>]) -> std::result::Result<(), Vec<RowViolation>> {
    let width = rows.first().map_or(0, Vec::len);
    let mut violations = Vec::new();
    for (r, row) in rows.iter_mut().enumerate() {
        if let Some(v) = check_row(row, width) {
            violations.push(RowViolation { row: r, kind: v });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

fn check_row(row: &mut [f64], width: usize) -> Option<ViolationKind> {
    if row.len() != width || width == 0 {
        return Some(ViolationKind::Width { expected: width, actual: row.len() });
    }
    for (column, &value) in row.iter().enumerate() {
        if !value.is_finite() {
            return Some(ViolationKind::NonFinite { column });
        }
        if !(-ROW_TOLERANCE..=1.0 + ROW_TOLERANCE).contains(&value) {
            return Some(ViolationKind::OutOfRange { column, value });
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOLERANCE {
        return Some(ViolationKind::SumDeviation { sum });
    }
    let mut clamped = false;
    for v in row.iter_mut() {
        let c = v.clamp(0.0, 1.0);
        clamped |= c != *v;
        *v = c;
    }
    let sum: f64 = row.iter().sum();
    if clamped || (sum - 1.0).abs() > 4.0 * f64::EPSILON * width as f64 {
        row.iter_mut().for_each(|v| *v /= sum);
    }
    None
}

fn default_ids(k: usize) -> Arc<[String]> {
    (1..=k).map(|i| format!("k{i}")).collect()
}

/// Posterior matrix of `K` classifiers over `M` classes for one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaProfile {
    scores: Vec<f64>,
    classes: usize,
    classifier_ids: Arc<[String]>,
}

impl MetaProfile {
    /// Build from per-classifier rows with identifiers `k1..kK`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let ids = default_ids(rows.len());
        Self::new(rows, ids)
    }

    pub fn new(mut rows: Vec<Vec<f64>>, classifier_ids: Arc<[String]>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::ShapeMismatch(format!(
                "a profile needs at least 2 classifiers, got {}",
                rows.len()
            )));
        }
        if classifier_ids.len() != rows.len() {
            return Err(Error::LengthMismatch { expected: rows.len(), actual: classifier_ids.len() });
        }
        validate(&mut rows).map_err(Error::InvalidProfile)?;
        let classes = rows[0].len();
        if classes < 2 {
            return Err(Error::ShapeMismatch(format!("a profile needs at least 2 classes, got {classes}")));
        }
        Ok(Self { scores: rows.concat(), classes, classifier_ids })
    }

    pub fn n_classifiers(&self) -> usize {
        self.scores.len() / self.classes
    }

    pub fn n_classes(&self) -> usize {
        self.classes
    }

    pub fn classifier_ids(&self) -> &Arc<[String]> {
        &self.classifier_ids
    }

    /// Flattened scores, classifier-major.
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.scores[k * self.classes..(k + 1) * self.classes]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.scores.chunks_exact(self.classes)
    }

    pub fn get(&self, k: usize, m: usize) -> f64 {
        self.scores[k * self.classes + m]
    }

    /// Column `m` in classifier order.
    pub fn column(&self, m: usize) -> Vec<f64> {
        self.rows().map(|r| r[m]).collect()
    }

    /// The `K` posteriors for class `class_index`, as a granule sample.
    pub fn column_sample(&self, class_index: usize) -> Result<Sample> {
        if class_index >= self.classes {
            return Err(Error::IndexOutOfRange { index: class_index, len: self.classes });
        }
        Sample::new(self.column(class_index))
    }

    /// Same profile with class columns reordered: new column `j` is old column `perm[j]`.
    pub fn permute_classes(&self, perm: &[usize]) -> Result<Self> {
        let rows = self.rows().map(|r| perm.iter().map(|&p| r[p]).collect()).collect();
        Self::new(rows, self.classifier_ids.clone())
    }
}

/// `N` profiles sharing `K`, `M` and classifier order.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaMatrix {
    rows: Vec<MetaProfile>,
    catalog: ClassCatalog,
}

impl MetaMatrix {
    pub fn new(rows: Vec<MetaProfile>, catalog: ClassCatalog) -> Result<Self> {
        if let Some(first) = rows.first() {
            for (n, p) in rows.iter().enumerate() {
                if p.n_classes() != catalog.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "profile {n} has {} classes, catalog has {}",
                        p.n_classes(),
                        catalog.len()
                    )));
                }
                if p.classifier_ids() != first.classifier_ids() {
                    return Err(Error::ShapeMismatch(format!(
                        "profile {n} has a different classifier roster"
                    )));
                }
            }
        }
        Ok(Self { rows, catalog })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[MetaProfile] {
        &self.rows
    }

    pub fn catalog(&self) -> &ClassCatalog {
        &self.catalog
    }

    pub fn n_classifiers(&self) -> usize {
        self.rows.first().map_or(0, MetaProfile::n_classifiers)
    }

    /// Write the flattened `N x MK` layout with a trailing label column.
    ///
    /// Header is `obs_id,k1_y1,...,k1_yM,...,kK_yM,label`; values carry 17
    /// significant digits so parsing them back is bit-exact.
    pub fn write_csv<W: Write>(&self, labels: &[usize], mut out: W) -> Result<()> {
        if labels.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), actual: labels.len() });
        }
        let k = self.n_classifiers();
        let m = self.catalog.len();
        let mut header = vec!["obs_id".to_string()];
        for ki in 1..=k {
            for mi in 1..=m {
                header.push(format!("k{ki}_y{mi}"));
            }
        }
        header.push("label".into());
        writeln!(out, "{}", header.join(","))?;
        for (n, (p, &y)) in self.rows.iter().zip(labels).enumerate() {
            let name = self
                .catalog
                .name(y)
                .ok_or(Error::IndexOutOfRange { index: y, len: m })?;
            write!(out, "{n}")?;
            for v in p.scores() {
                write!(out, ",{v:.16e}")?;
            }
            writeln!(out, ",{name}")?;
        }
        Ok(())
    }

    /// Parse the layout produced by [`MetaMatrix::write_csv`].
    pub fn read_csv<R: Read>(input: R, catalog: ClassCatalog) -> Result<(Self, Vec<usize>)> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let width = reader.headers()?.len();
        let m = catalog.len();
        if width < 2 + 2 * m || (width - 2) % m != 0 {
            return Err(Error::Format(format!("meta-matrix header width {width} incompatible with {m} classes")));
        }
        let k = (width - 2) / m;
        let ids = default_ids(k);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (n, record) in reader.records().enumerate() {
            let record = record?;
            let values = (1..width - 1)
                .map(|i| {
                    record[i]
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Format(format!("row {n}, column {i}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let label = &record[width - 1];
            let y = catalog
                .index_of(label)
                .ok_or_else(|| Error::Format(format!("row {n}: unknown class '{label}'")))?;
            let profile_rows = values.chunks_exact(m).map(<[f64]>::to_vec).collect();
            rows.push(MetaProfile::new(profile_rows, ids.clone())?);
            labels.push(y);
        }
        Ok((Self::new(rows, catalog)?, labels))
    }
}
