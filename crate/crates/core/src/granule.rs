//! Interval information granules built by justifiable granularity.
//!
//! Given a finite sample, the granule `[lower, upper]` is anchored at the
//! sample median. Each bound is chosen independently among the sample
//! elements on its side of the median so as to maximise
//!
//! ```text
//! V(b) = #{x : med <= x <= b} * exp(-alpha * |med - b|)
//! ```
//!
//! (mirrored for the lower bound). Coverage rewards wide intervals, the
//! exponential specificity term penalises them, and `alpha` sets the
//! trade-off: `alpha = 0` returns `[min, max]`, a very large `alpha`
//! collapses the granule onto the median.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A non-empty multiset of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn median(&self) -> f64 {
        median_sorted(&self.sorted())
    }

    fn sorted(&self) -> Vec<f64> {
        let mut sorted = self.values.clone();
        sorted.sort_by(f64::total_cmp);
        sorted
    }
}

impl TryFrom<Vec<f64>> for Sample {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl TryFrom<&[f64]> for Sample {
    type Error = Error;

    fn try_from(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec())
    }
}

/// Specificity weight `alpha` of the exponential penalty `exp(-alpha * u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GranuleParams {
    alpha: f64,
}

impl GranuleParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "alpha must be finite and non-negative, got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// A closed interval `[lower, upper]` together with the `alpha` that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Granule {
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
}

impl Granule {
    pub fn length(&self) -> f64 {
        (self.upper - self.lower).abs()
    }

    pub fn midpoint(&self) -> f64 {
        (self.lower + self.upper) / 2.0
    }
}

impl fmt::Display for Granule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => write!(f, "[{:.*}, {:.*}]", p, self.lower, p, self.upper),
            None => write!(f, "[{}, {}]", self.lower, self.upper),
        }
    }
}

/// Which bound of the granule a candidate is evaluated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

/// Median of a slice. Even counts average the two central order statistics.
pub fn median_of(values: &[f64]) -> Result<f64> {
    Ok(Sample::try_from(values)?.median())
}

pub(crate) fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Coverage times specificity for a single candidate bound.
///
/// Coverage counts the sample points (with multiplicity) lying between the
/// median and `bound`, both ends included.
pub fn evidence_score(sample: &Sample, params: GranuleParams, bound: f64, side: Side) -> Result<f64> {
    let median = sample.median();
    let covered = match side {
        Side::Upper if bound >= median => sample
            .values()
            .iter()
            .filter(|&&x| median <= x && x <= bound)
            .count(),
        Side::Lower if bound <= median => sample
            .values()
            .iter()
            .filter(|&&x| bound <= x && x <= median)
            .count(),
        _ => return Err(Error::BoundSideMismatch { bound, median, side }),
    };
    Ok(score(covered, params.alpha, median, bound))
}

#[inline]
fn score(covered: usize, alpha: f64, median: f64, bound: f64) -> f64 {
    covered as f64 * (-alpha * (median - bound).abs()).exp()
}

/// Build the optimal granule for `sample`.
///
/// Each side scans candidates outward from the median and only replaces the
/// incumbent on a strictly larger score, so ties go to the bound nearest the
/// median. Cost is `O(n log n)` for the sort plus one linear pass per side.
pub fn construct_granule(sample: &Sample, params: GranuleParams) -> Result<Granule> {
    let sorted = sample.sorted();
    let median = median_sorted(&sorted);
    let alpha = params.alpha;
    let n = sorted.len();

    // Upper bound: candidates are sorted[start..], all >= median.
    let start = sorted.partition_point(|&v| v < median);
    let mut upper = (f64::NEG_INFINITY, median);
    let mut i = start;
    while i < n {
        let value = sorted[i];
        let mut j = i + 1;
        while j < n && sorted[j] == value {
            j += 1;
        }
        let s = score(j - start, alpha, median, value);
        if s > upper.0 {
            upper = (s, value);
        }
        i = j;
    }

    // Lower bound: candidates are sorted[..end], all <= median, scanned downward.
    let end = sorted.partition_point(|&v| v <= median);
    let mut lower = (f64::NEG_INFINITY, median);
    let mut j = end;
    while j > 0 {
        let value = sorted[j - 1];
        let mut i = j - 1;
        while i > 0 && sorted[i - 1] == value {
            i -= 1;
        }
        let s = score(end - i, alpha, median, value);
        if s > lower.0 {
            lower = (s, value);
        }
        j = i;
    }

    Ok(Granule { lower: lower.1, upper: upper.1, alpha })
}
