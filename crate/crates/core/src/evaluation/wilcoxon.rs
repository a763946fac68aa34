//! Two-sided Wilcoxon signed-rank test for paired samples.
//!
//! Zero differences are dropped and tied absolute differences get midranks.
//! Up to [`EXACT_LIMIT`] pairs the p-value comes from the exact distribution
//! of `W+` over all `2^n` sign assignments of the observed ranks, counted by
//! dynamic programming over doubled (hence integral) midranks. Above that, a
//! normal approximation with tie and continuity corrections is used.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::ranks::midranks;
use crate::error::{Error, Result};

pub const EXACT_LIMIT: usize = 25;
pub const MIN_PAIRS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// `a` tends to exceed `b`.
    ABetter,
    /// `b` tends to exceed `a`.
    BBetter,
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub verdict: Verdict,
    pub p_value: f64,
    /// Sum of ranks of positive differences `a - b`.
    pub w_plus: f64,
    pub w_minus: f64,
    /// Pairs left after dropping zero differences.
    pub n: usize,
    pub exact: bool,
    /// Fewer than [`MIN_PAIRS`] non-zero differences; verdict forced to `Equal`.
    pub insufficient: bool,
}

pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], significance: f64) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), actual: b.len() });
    }
    if !(significance > 0.0 && significance < 1.0) {
        return Err(Error::InvalidParameter(format!("significance must lie in (0, 1), got {significance}")));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if let Some(d) = diffs.iter().find(|d| !d.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite paired difference {d}")));
    }
    let n = diffs.len();
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = midranks(&abs);
    let w_plus: f64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;

    if n < MIN_PAIRS {
        return Ok(WilcoxonResult {
            verdict: Verdict::Equal,
            p_value: 1.0,
            w_plus,
            w_minus,
            n,
            exact: true,
            insufficient: true,
        });
    }

    let exact = n <= EXACT_LIMIT;
    let p_value = if exact { exact_p_value(&ranks, w_plus) } else { normal_p_value(&abs, &ranks, w_plus) };
    let verdict = if p_value >= significance {
        Verdict::Equal
    } else if w_plus > w_minus {
        Verdict::ABetter
    } else {
        Verdict::BBetter
    };
    Ok(WilcoxonResult { verdict, p_value, w_plus, w_minus, n, exact, insufficient: false })
}

/// Two-sided exact p-value: `2 * min(P(W+ <= w), P(W+ >= w))`, capped at 1.
pub fn exact_p_value(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; max + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let w = (2.0 * w_plus).round() as usize;
    let all = 2f64.powi(ranks.len() as i32);
    let lower: f64 = counts[..=w].iter().sum::<f64>() / all;
    let upper: f64 = counts[w..].iter().sum::<f64>() / all;
    (2.0 * lower.min(upper)).min(1.0)
}

fn normal_p_value(abs: &[f64], ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = abs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::standard();
    (2.0 * (1.0 - normal.cdf(z))).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn five_positive_differences_are_not_significant() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [0.0; 5];
        let r = wilcoxon_signed_rank(&a, &b, 0.05).unwrap();
        assert_eq!(r.w_minus, 0.0);
        assert_eq!(r.p_value, 0.0625);
        assert_eq!(r.verdict, Verdict::Equal);
        assert!(r.exact && !r.insufficient);
    }

    #[test]
    fn ten_positive_differences_are_significant() {
        let a: Vec<f64> = (1..=10).map(f64::from).collect();
        let r = wilcoxon_signed_rank(&a, &[0.0; 10], 0.05).unwrap();
        assert_relative_eq!(r.p_value, 2.0 / 1024.0, epsilon = 1e-15);
        assert_eq!(r.verdict, Verdict::ABetter);
        let r = wilcoxon_signed_rank(&[0.0; 10], &a, 0.05).unwrap();
        assert_eq!(r.verdict, Verdict::BBetter);
    }

    #[test]
    fn identical_samples_are_flagged_equal() {
        let a = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let r = wilcoxon_signed_rank(&a, &a, 0.05).unwrap();
        assert_eq!(r.verdict, Verdict::Equal);
        assert!(r.insufficient);
        assert_eq!(r.n, 0);
    }

    #[test]
    fn normal_approximation_for_large_samples() {
        let a: Vec<f64> = (0..40).map(|i| f64::from(i) * 0.01 + 0.2).collect();
        let b: Vec<f64> = (0..40).map(|i| f64::from(i) * 0.01).collect();
        let r = wilcoxon_signed_rank(&a, &b, 0.05).unwrap();
        assert!(!r.exact);
        assert!(r.p_value < 1e-6);
        assert_eq!(r.verdict, Verdict::ABetter);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(wilcoxon_signed_rank(&[1.0], &[1.0, 2.0], 0.05).is_err());
        assert!(wilcoxon_signed_rank(&[1.0], &[2.0], 1.5).is_err());
    }
}
