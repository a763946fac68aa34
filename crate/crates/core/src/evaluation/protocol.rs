use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{bias_variance, error_rate, macro_f1, mean_variance, BiasVarianceReport};
use super::ranks::average_ranks;
use super::wilcoxon::{wilcoxon_signed_rank, Verdict, WilcoxonResult};
use crate::combiners::{argmax, dt_classify, dt_fit, fixed_rule_classify, granular_classify, FixedRule, HFunction};
use crate::error::{Error, Result};
use crate::learners::{Dataset, LearnerSpec};
use crate::metadata::MetaProfile;
use crate::seed;
use crate::training::{check_stratifiable, fit_all, generate_meta_cv, profile_of, select_alpha, AlphaGrid, FoldPlan};

/// A method evaluated by the protocol.
///
/// Written as `learners` (every base learner on its own), a fixed rule name,
/// `decision-template`, `granular-cv`, or `granular-fixed:<alpha>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MethodSpec {
    Learners,
    Fixed(FixedRule),
    DecisionTemplate,
    GranularCv,
    GranularFixed(f64),
}

impl MethodSpec {
    pub fn defaults() -> Vec<Self> {
        let mut methods = vec![Self::Learners];
        methods.extend(FixedRule::ALL.into_iter().map(Self::Fixed));
        methods.extend([Self::DecisionTemplate, Self::GranularCv, Self::GranularFixed(1.0)]);
        methods
    }

    fn is_granular(self) -> bool {
        matches!(self, Self::GranularCv | Self::GranularFixed(_))
    }

    fn needs_meta(self) -> bool {
        matches!(self, Self::DecisionTemplate | Self::GranularCv)
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Learners => f.write_str("learners"),
            Self::Fixed(rule) => write!(f, "{rule}"),
            Self::DecisionTemplate => f.write_str("decision-template"),
            Self::GranularCv => f.write_str("granular-cv"),
            Self::GranularFixed(alpha) => write!(f, "granular-fixed:{alpha}"),
        }
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "learners" => Self::Learners,
            "decision-template" => Self::DecisionTemplate,
            "granular-cv" => Self::GranularCv,
            "granular-fixed" => Self::GranularFixed(1.0),
            _ => {
                if let Some(a) = s.strip_prefix("granular-fixed:") {
                    let alpha: f64 = a
                        .parse()
                        .map_err(|_| Error::InvalidParameter(format!("invalid alpha in method '{s}'")))?;
                    if !alpha.is_finite() || alpha < 0.0 {
                        return Err(Error::InvalidParameter(format!("invalid alpha in method '{s}'")));
                    }
                    Self::GranularFixed(alpha)
                } else {
                    Self::Fixed(s.parse().map_err(|_| Error::InvalidParameter(format!("unknown method '{s}'")))?)
                }
            }
        })
    }
}

impl TryFrom<String> for MethodSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MethodSpec> for String {
    fn from(m: MethodSpec) -> Self {
        m.to_string()
    }
}

/// Settings of the repeated cross-validation protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub significance: f64,
    /// Folds of the inner CV that produces training meta-data.
    pub inner_folds: usize,
    pub learners: Vec<LearnerSpec>,
    pub methods: Vec<MethodSpec>,
    pub grid: AlphaGrid,
    pub h: HFunction,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            repeats: 10,
            seed: 0,
            significance: 0.05,
            inner_folds: 10,
            learners: LearnerSpec::default_roster(),
            methods: MethodSpec::defaults(),
            grid: AlphaGrid::default(),
            h: HFunction::H3,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.folds < 2 {
            return bad(format!("folds must be >= 2, got {}", self.folds));
        }
        if self.repeats < 1 {
            return bad("repeats must be >= 1".into());
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return bad(format!("significance must lie in (0, 1), got {}", self.significance));
        }
        if self.methods.is_empty() {
            return bad("no methods configured".into());
        }
        let combines = self.methods.iter().any(|m| !matches!(m, MethodSpec::Learners));
        if combines && self.learners.len() < 2 {
            return bad(format!("combiners need at least 2 learners, got {}", self.learners.len()));
        }
        if self.learners.is_empty() {
            return bad("no learners configured".into());
        }
        if self.methods.iter().any(|m| m.needs_meta()) && self.inner_folds < 2 {
            return bad(format!("inner folds must be >= 2, got {}", self.inner_folds));
        }
        for l in &self.learners {
            l.validate()?;
        }
        Ok(())
    }

    /// Expanded method names in report order.
    pub fn method_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for m in &self.methods {
            match m {
                MethodSpec::Learners => names.extend(self.learners.iter().map(ToString::to_string)),
                other => names.push(other.to_string()),
            }
        }
        names
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Win,
    Equal,
    Loss,
}

impl From<Verdict> for Outcome {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::ABetter => Self::Win,
            Verdict::BBetter => Self::Loss,
            Verdict::Equal => Self::Equal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasVarianceSummary {
    pub bias: Vec<f64>,
    pub variance: Vec<f64>,
    pub mean_bias: f64,
    pub mean_variance: f64,
}

/// Per-run values of one method on one dataset, ordered repeat-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub errors: Vec<f64>,
    pub f1: Vec<f64>,
    pub mean_error: f64,
    pub var_error: f64,
    pub mean_f1: f64,
    pub var_f1: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bias_variance: Option<BiasVarianceSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub selected_alpha: Option<Vec<f64>>,
}

/// Wilcoxon comparison of a granular `reference` against another method.
/// Outcomes are from the reference's point of view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub reference: String,
    pub other: String,
    pub error: Outcome,
    pub error_test: WilcoxonResult,
    pub f1: Outcome,
    pub f1_test: WilcoxonResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub name: String,
    pub observations: usize,
    pub features: usize,
    pub classes: usize,
    pub methods: Vec<MethodResult>,
    pub comparisons: Vec<Comparison>,
}

impl DatasetReport {
    pub fn method(&self, name: &str) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.method == name)
    }

    pub fn comparison(&self, reference: &str, other: &str) -> Option<&Comparison> {
        self.comparisons
            .iter()
            .find(|c| c.reference == reference && c.other == other)
    }
}

/// Win/equal/loss counts over datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub reference: String,
    pub other: String,
    pub error: [usize; 3],
    pub f1: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub method: String,
    pub error_rank: f64,
    pub f1_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub protocol: ProtocolConfig,
    pub datasets: Vec<DatasetReport>,
    pub tallies: Vec<Tally>,
    pub rankings: Vec<RankEntry>,
}

impl ExperimentReport {
    pub fn dataset(&self, name: &str) -> Option<&DatasetReport> {
        self.datasets.iter().find(|d| d.name == name)
    }
}

/// Everything measured on one held-out fold.
struct RunOutcome {
    /// `(error, f1)` per expanded method.
    scores: Vec<(f64, f64)>,
    bias_variance: Vec<Option<BiasVarianceReport>>,
    selected_alpha: Option<f64>,
}

fn run_fold(data: &Dataset, plan: &FoldPlan, fold: usize, config: &ProtocolConfig, run_seed: u64) -> Result<RunOutcome> {
    let train = data.subset(&plan.train_indices(fold));
    let test_idx = plan.test_indices(fold);
    let truth: Vec<usize> = test_idx.iter().map(|&i| data.labels()[i]).collect();
    let classes = data.n_classes();
    let learners = &config.learners;

    let meta = if config.methods.iter().any(|m| m.needs_meta()) {
        check_stratifiable(&train, config.inner_folds)?;
        let inner = FoldPlan::stratified(train.labels(), config.inner_folds, seed::derive(run_seed, &[0]))?;
        Some(generate_meta_cv(&train, learners, &inner, seed::derive(run_seed, &[1]))?)
    } else {
        None
    };
    let fitted = fit_all(&train, learners, seed::derive(run_seed, &[2]))?;
    let ids: Arc<[String]> = learners.iter().map(ToString::to_string).collect();

    // K x |test| base predictions
    let base: Vec<Vec<usize>>;
    let profiles: Vec<MetaProfile>;
    if learners.len() >= 2 {
        profiles = test_idx
            .iter()
            .map(|&i| profile_of(&fitted, &ids, data.row(i)))
            .collect::<Result<_>>()?;
        base = (0..learners.len())
            .map(|k| profiles.iter().map(|p| argmax(p.row(k))).collect())
            .collect();
    } else {
        profiles = Vec::new();
        base = fitted
            .iter()
            .map(|c| test_idx.iter().map(|&i| c.predict(data.row(i))).collect::<Result<_>>())
            .collect::<Result<_>>()?;
    }

    let mut scores = Vec::new();
    let mut bv = Vec::new();
    let mut selected_alpha = None;
    let score = |pred: &[usize]| -> Result<(f64, f64)> {
        Ok((error_rate(pred, &truth)?, macro_f1(pred, &truth, classes)?))
    };
    for method in &config.methods {
        let predictions: Vec<usize> = match *method {
            MethodSpec::Learners => {
                for pred in &base {
                    scores.push(score(pred)?);
                    bv.push(None);
                }
                continue;
            }
            MethodSpec::Fixed(rule) => profiles.iter().map(|p| fixed_rule_classify(p, rule).class).collect(),
            MethodSpec::DecisionTemplate => {
                let model = dt_fit(meta.as_ref().expect("meta-data generated"), train.labels())?;
                profiles
                    .iter()
                    .map(|p| dt_classify(&model, p).map(|d| d.class))
                    .collect::<Result<_>>()?
            }
            MethodSpec::GranularCv => {
                let (alpha, _) = select_alpha(
                    meta.as_ref().expect("meta-data generated"),
                    train.labels(),
                    &config.grid,
                    config.h,
                )?;
                selected_alpha = Some(alpha);
                profiles
                    .iter()
                    .map(|p| granular_classify(p, alpha, config.h).map(|d| d.class))
                    .collect::<Result<_>>()?
            }
            MethodSpec::GranularFixed(alpha) => profiles
                .iter()
                .map(|p| granular_classify(p, alpha, config.h).map(|d| d.class))
                .collect::<Result<_>>()?,
        };
        scores.push(score(&predictions)?);
        bv.push(Some(bias_variance(&predictions, &base, &truth)?));
    }
    Ok(RunOutcome { scores, bias_variance: bv, selected_alpha })
}

fn compare(reference: &MethodResult, other: &MethodResult, significance: f64) -> Result<Comparison> {
    let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<f64>>();
    let error_test = wilcoxon_signed_rank(&neg(&reference.errors), &neg(&other.errors), significance)?;
    let f1_test = wilcoxon_signed_rank(&reference.f1, &other.f1, significance)?;
    Ok(Comparison {
        reference: reference.method.clone(),
        other: other.method.clone(),
        error: error_test.verdict.into(),
        error_test,
        f1: f1_test.verdict.into(),
        f1_test,
    })
}

/// Run the repeated stratified cross-validation protocol.
///
/// Every `(dataset, repeat)` pair gets its own stratified fold plan seeded
/// by `derive(seed, [dataset, repeat])`, shared by all methods so their
/// per-run values are paired. Folds run in parallel; all aggregation is
/// ordered by `(repeat, fold)` so the report does not depend on scheduling.
pub fn run_protocol(datasets: &[Dataset], config: &ProtocolConfig) -> Result<ExperimentReport> {
    config.validate()?;
    for data in datasets {
        check_stratifiable(data, config.folds)?;
    }
    let names = config.method_names();
    let granular: Vec<usize> = {
        let mut idx = Vec::new();
        let mut pos = 0;
        for m in &config.methods {
            match m {
                MethodSpec::Learners => pos += config.learners.len(),
                other => {
                    if other.is_granular() {
                        idx.push(pos);
                    }
                    pos += 1;
                }
            }
        }
        idx
    };
    let cv_method = config
        .methods
        .iter()
        .any(|m| matches!(m, MethodSpec::GranularCv))
        .then(|| names.iter().position(|n| n == "granular-cv"))
        .flatten();

    let mut reports = Vec::with_capacity(datasets.len());
    for (d, data) in datasets.iter().enumerate() {
        let plans: Vec<FoldPlan> = (0..config.repeats)
            .map(|r| FoldPlan::stratified(data.labels(), config.folds, seed::derive(config.seed, &[d as u64, r as u64])))
            .collect::<Result<_>>()?;
        let jobs: Vec<(usize, usize)> = (0..config.repeats)
            .flat_map(|r| (0..config.folds).map(move |f| (r, f)))
            .collect();
        let runs: Vec<RunOutcome> = jobs
            .par_iter()
            .map(|&(r, f)| {
                let run_seed = seed::derive(config.seed, &[d as u64, r as u64, f as u64, 1]);
                run_fold(data, &plans[r], f, config, run_seed)
            })
            .collect::<Result<_>>()?;

        let methods: Vec<MethodResult> = names
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let errors: Vec<f64> = runs.iter().map(|r| r.scores[j].0).collect();
                let f1: Vec<f64> = runs.iter().map(|r| r.scores[j].1).collect();
                let (mean_error, var_error) = mean_variance(&errors);
                let (mean_f1, var_f1) = mean_variance(&f1);
                let bias_variance = runs[0].bias_variance[j].map(|_| {
                    let bias: Vec<f64> = runs.iter().filter_map(|r| r.bias_variance[j]).map(|b| b.bias).collect();
                    let variance: Vec<f64> =
                        runs.iter().filter_map(|r| r.bias_variance[j]).map(|b| b.variance).collect();
                    BiasVarianceSummary {
                        mean_bias: mean_variance(&bias).0,
                        mean_variance: mean_variance(&variance).0,
                        bias,
                        variance,
                    }
                });
                let selected_alpha = (Some(j) == cv_method)
                    .then(|| runs.iter().filter_map(|r| r.selected_alpha).collect());
                MethodResult {
                    method: name.clone(),
                    errors,
                    f1,
                    mean_error,
                    var_error,
                    mean_f1,
                    var_f1,
                    bias_variance,
                    selected_alpha,
                }
            })
            .collect();

        let mut comparisons = Vec::new();
        for &g in &granular {
            for (j, other) in methods.iter().enumerate() {
                if j != g {
                    comparisons.push(compare(&methods[g], other, config.significance)?);
                }
            }
        }
        reports.push(DatasetReport {
            name: data.name().to_string(),
            observations: data.len(),
            features: data.dim(),
            classes: data.n_classes(),
            methods,
            comparisons,
        });
    }

    let tallies = tally(&reports, &granular, &names);
    let rankings = if reports.is_empty() {
        Vec::new()
    } else {
        let error_table: Vec<Vec<f64>> = (0..names.len())
            .map(|j| reports.iter().map(|r| r.methods[j].mean_error).collect())
            .collect();
        let f1_table: Vec<Vec<f64>> = (0..names.len())
            .map(|j| reports.iter().map(|r| -r.methods[j].mean_f1).collect())
            .collect();
        let error_ranks = average_ranks(&error_table)?;
        let f1_ranks = average_ranks(&f1_table)?;
        names
            .iter()
            .zip(error_ranks.into_iter().zip(f1_ranks))
            .map(|(method, (error_rank, f1_rank))| RankEntry { method: method.clone(), error_rank, f1_rank })
            .collect()
    };

    Ok(ExperimentReport { protocol: config.clone(), datasets: reports, tallies, rankings })
}

fn tally(reports: &[DatasetReport], granular: &[usize], names: &[String]) -> Vec<Tally> {
    let slot = |o: Outcome| match o {
        Outcome::Win => 0,
        Outcome::Equal => 1,
        Outcome::Loss => 2,
    };
    let mut tallies = Vec::new();
    for &g in granular {
        for (j, other) in names.iter().enumerate() {
            if j == g {
                continue;
            }
            let mut t = Tally { reference: names[g].clone(), other: other.clone(), error: [0; 3], f1: [0; 3] };
            for report in reports {
                if let Some(c) = report.comparison(&names[g], other) {
                    t.error[slot(c.error)] += 1;
                    t.f1[slot(c.f1)] += 1;
                }
            }
            tallies.push(t);
        }
    }
    tallies
}
