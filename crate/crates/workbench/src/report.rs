//! Evaluation report emission: a human table, per-run and summary CSVs, and
//! JSON.

use std::fmt::Write as _;

use granulex::evaluation::{DatasetReport, ExperimentReport, Outcome};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::WorkbenchError;

/// Everything `evaluate` writes: the effective configuration and the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationOutput {
    pub config: ExperimentConfig,
    pub report: ExperimentReport,
}

impl EvaluationOutput {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}

fn marker(o: Outcome) -> char {
    match o {
        Outcome::Win => 'W',
        Outcome::Equal => 'E',
        Outcome::Loss => 'L',
    }
}

/// The granular method whose comparisons annotate the table.
fn reference(d: &DatasetReport) -> Option<&str> {
    let refs: Vec<&str> = d.comparisons.iter().map(|c| c.reference.as_str()).collect();
    refs.iter().find(|r| **r == "granular-cv").or_else(|| refs.first()).copied()
}

/// Fixed-width table: per dataset, mean/variance of error and macro-F1 for
/// each method, with the reference method's Wilcoxon outcome against it
/// (`W`/`E`/`L` from the reference's side).
pub fn human_table(report: &ExperimentReport) -> String {
    let mut out = String::new();
    for d in &report.datasets {
        let reference = reference(d);
        let _ = writeln!(
            out,
            "{} (N={}, d={}, M={}, runs={})",
            d.name,
            d.observations,
            d.features,
            d.classes,
            d.methods.first().map_or(0, |m| m.errors.len())
        );
        let width = d.methods.iter().map(|m| m.method.len()).max().unwrap_or(6).max(6);
        let vs = reference.map_or(String::new(), |r| format!("  vs {r}"));
        let _ = writeln!(
            out,
            "  {:<width$}  {:>10} {:>10}  {:>10} {:>10}{vs}",
            "method", "error", "variance", "macro-F1", "variance"
        );
        for m in &d.methods {
            let mark = reference
                .and_then(|r| d.comparison(r, &m.method))
                .map_or(String::new(), |c| format!("  {} {}", marker(c.error), marker(c.f1)));
            let _ = writeln!(
                out,
                "  {:<width$}  {:>10.6} {:>10.6}  {:>10.6} {:>10.6}{mark}",
                m.method, m.mean_error, m.var_error, m.mean_f1, m.var_f1
            );
        }
        let bv: Vec<_> = d
            .methods
            .iter()
            .filter_map(|m| m.bias_variance.as_ref().map(|b| (m, b)))
            .collect();
        if !bv.is_empty() {
            let _ = writeln!(out, "  {:<width$}  {:>10} {:>10}", "combiner", "bias", "variance");
            for (m, b) in bv {
                let _ = writeln!(out, "  {:<width$}  {:>10.6} {:>10.6}", m.method, b.mean_bias, b.mean_variance);
            }
        }
        if let Some(alphas) = d.methods.iter().find_map(|m| m.selected_alpha.as_ref()) {
            let mean = alphas.iter().sum::<f64>() / alphas.len().max(1) as f64;
            let _ = writeln!(out, "  selected alpha: mean {mean:.3} over {} runs", alphas.len());
        }
        out.push('\n');
    }
    if !report.tallies.is_empty() {
        let _ = writeln!(out, "win/equal/loss over datasets (error | macro-F1)");
        for t in &report.tallies {
            let _ = writeln!(
                out,
                "  {} vs {}: {}/{}/{} | {}/{}/{}",
                t.reference, t.other, t.error[0], t.error[1], t.error[2], t.f1[0], t.f1[1], t.f1[2]
            );
        }
        out.push('\n');
    }
    if !report.rankings.is_empty() {
        let _ = writeln!(out, "average rank (error, macro-F1)");
        for r in &report.rankings {
            let _ = writeln!(out, "  {:<24} {:>6.3} {:>6.3}", r.method, r.error_rank, r.f1_rank);
        }
    }
    out
}

fn csv_err(e: impl std::fmt::Display) -> WorkbenchError {
    WorkbenchError::Data(format!("writing CSV: {e}"))
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

/// One row per (dataset, method, repeat, fold).
pub fn runs_csv(report: &ExperimentReport) -> Result<String, WorkbenchError> {
    let folds = report.protocol.folds;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["dataset", "method", "repeat", "fold", "error", "macro_f1", "bias", "variance", "alpha"])
        .map_err(csv_err)?;
    for d in &report.datasets {
        for m in &d.methods {
            for (j, (e, f)) in m.errors.iter().zip(&m.f1).enumerate() {
                let bv = m.bias_variance.as_ref();
                w.write_record([
                    d.name.clone(),
                    m.method.clone(),
                    (j / folds).to_string(),
                    (j % folds).to_string(),
                    e.to_string(),
                    f.to_string(),
                    opt(bv.map(|b| b.bias[j])),
                    opt(bv.map(|b| b.variance[j])),
                    opt(m.selected_alpha.as_ref().map(|a| a[j])),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    String::from_utf8(w.into_inner().map_err(csv_err)?).map_err(csv_err)
}

/// One row per (dataset, method) with means, variances and, where
/// available, the reference method's outcomes.
pub fn summary_csv(report: &ExperimentReport) -> Result<String, WorkbenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "dataset",
        "method",
        "mean_error",
        "var_error",
        "mean_f1",
        "var_f1",
        "mean_bias",
        "mean_variance",
        "reference",
        "error_outcome",
        "error_p",
        "f1_outcome",
        "f1_p",
    ])
    .map_err(csv_err)?;
    let outcome = |o: Outcome| match o {
        Outcome::Win => "win",
        Outcome::Equal => "equal",
        Outcome::Loss => "loss",
    };
    for d in &report.datasets {
        let reference = reference(d);
        for m in &d.methods {
            let c = reference.and_then(|r| d.comparison(r, &m.method));
            let bv = m.bias_variance.as_ref();
            w.write_record([
                d.name.clone(),
                m.method.clone(),
                m.mean_error.to_string(),
                m.var_error.to_string(),
                m.mean_f1.to_string(),
                m.var_f1.to_string(),
                opt(bv.map(|b| b.mean_bias)),
                opt(bv.map(|b| b.mean_variance)),
                c.map_or(String::new(), |c| c.reference.clone()),
                c.map_or(String::new(), |c| outcome(c.error).into()),
                opt(c.map(|c| c.error_test.p_value)),
                c.map_or(String::new(), |c| outcome(c.f1).into()),
                opt(c.map(|c| c.f1_test.p_value)),
            ])
            .map_err(csv_err)?;
        }
    }
    String::from_utf8(w.into_inner().map_err(csv_err)?).map_err(csv_err)
}
