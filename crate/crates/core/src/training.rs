//! Training the granular ensemble.
//!
//! Training meta-data come from stratified `T`-fold cross-validation: the
//! profile of every observation in fold `t` is produced by classifiers fitted
//! on the other `T - 1` folds only. Each candidate `alpha` is scored by the
//! error rate of the granular combiner on those profiles, the best one is
//! kept, and the base learners are refitted on the whole training set.
//!
//! The error used to pick `alpha` is measured on the same meta-data it is
//! selected from, with no nested validation, so the reported curve is an
//! optimistic estimate.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combiners::{granular_decision, granular_intervals, Decision, HFunction, IntervalMemberships};
use crate::error::{Error, Result};
use crate::granule::GranuleParams;
use crate::learners::{Dataset, FittedClassifier, Learner, LearnerSpec, SoftClassifier};
use crate::metadata::{ClassCatalog, MetaMatrix, MetaProfile};
use crate::seed;

/// Candidate `alpha` values: non-empty, non-negative, strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AlphaGrid {
    values: Vec<f64>,
}

impl AlphaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("alpha grid is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidParameter(format!("alpha grid value {v} is not a finite non-negative number")));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("alpha grid must be strictly increasing".into()));
        }
        Ok(Self { values })
    }

    /// `lo, lo + step, ..., hi` with values rounded to 12 decimals so that
    /// `0:0.1:4` yields exactly the doubles nearest to 0.0, 0.1, ..., 4.0.
    pub fn range(lo: f64, step: f64, hi: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) || !lo.is_finite() || !hi.is_finite() || hi < lo {
            return Err(Error::InvalidParameter(format!("invalid alpha range {lo}:{step}:{hi}")));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        let values = (0..count)
            .map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12)
            .collect();
        Self::new(values)
    }

    pub fn single(alpha: f64) -> Result<Self> {
        Self::new(vec![alpha])
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
}

/// `{0, 0.1, ..., 4}`: 41 values.
impl Default for AlphaGrid {
    fn default() -> Self {
        Self { values: (0..=40).map(|i| i as f64 / 10.0).collect() }
    }
}

/// Parses `lo:step:hi`.
impl FromStr for AlphaGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let parse = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("invalid grid '{s}', expected lo:step:hi")))
        };
        match parts.as_slice() {
            [lo, step, hi] => Self::range(parse(lo)?, parse(step)?, parse(hi)?),
            _ => Err(Error::InvalidParameter(format!("invalid grid '{s}', expected lo:step:hi"))),
        }
    }
}

impl TryFrom<Vec<f64>> for AlphaGrid {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<AlphaGrid> for Vec<f64> {
    fn from(g: AlphaGrid) -> Self {
        g.values
    }
}

/// Search `alpha` over a grid by cross-validation, or use a fixed value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaMode {
    Grid(AlphaGrid),
    Fixed(f64),
}

impl Default for AlphaMode {
    fn default() -> Self {
        Self::Grid(AlphaGrid::default())
    }
}

impl fmt::Display for AlphaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Grid(g) => write!(f, "grid of {} values", g.len()),
            Self::Fixed(a) => write!(f, "fixed alpha {a}"),
        }
    }
}

/// Fold index per observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    assignments: Vec<usize>,
    folds: usize,
    seed: u64,
}

impl FoldPlan {
    /// Stratified plan: observations of each class are shuffled, the classes
    /// are laid end to end, and folds are dealt round-robin along that order.
    /// Per-class fold counts and total fold sizes each differ by at most one.
    pub fn stratified(labels: &[usize], folds: usize, seed_value: u64) -> Result<Self> {
        if folds < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 folds, got {folds}")));
        }
        if labels.len() < folds {
            return Err(Error::InvalidParameter(format!(
                "cannot split {} observations into {folds} folds",
                labels.len()
            )));
        }
        let classes = labels.iter().max().map_or(0, |&m| m + 1);
        let mut rng = seed::rng(seed_value);
        let mut order = Vec::with_capacity(labels.len());
        for c in 0..classes {
            let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
            members.shuffle(&mut rng);
            order.extend(members);
        }
        let mut assignments = vec![0; labels.len()];
        for (pos, &i) in order.iter().enumerate() {
            assignments[i] = pos % folds;
        }
        Ok(Self { assignments, folds, seed: seed_value })
    }

    /// Plan from explicit assignments.
    pub fn from_assignments(assignments: Vec<usize>, folds: usize) -> Result<Self> {
        if folds < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 folds, got {folds}")));
        }
        if let Some(&f) = assignments.iter().find(|&&f| f >= folds) {
            return Err(Error::IndexOutOfRange { index: f, len: folds });
        }
        Ok(Self { assignments, folds, seed: 0 })
    }

    pub fn folds(&self) -> usize {
        self.folds
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.assignments[i] != fold).collect()
    }
}

/// Reject datasets with a class smaller than the fold count.
pub fn check_stratifiable(data: &Dataset, folds: usize) -> Result<()> {
    for (c, &count) in data.class_counts().iter().enumerate() {
        if count < folds {
            return Err(Error::Stratification {
                dataset: data.name().to_string(),
                class: data.catalog().labels()[c].clone(),
                count,
                folds,
            });
        }
    }
    Ok(())
}

fn classifier_ids<L: Learner>(learners: &[L]) -> Arc<[String]> {
    learners.iter().map(Learner::name).collect()
}

/// Out-of-fold meta-data for every observation, in dataset order.
pub fn generate_meta_cv<L: Learner>(
    data: &Dataset,
    learners: &[L],
    plan: &FoldPlan,
    seed_value: u64,
) -> Result<MetaMatrix> {
    if plan.len() != data.len() {
        return Err(Error::LengthMismatch { expected: data.len(), actual: plan.len() });
    }
    if learners.len() < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 learners, got {}", learners.len())));
    }
    let splits: Vec<(Dataset, Vec<usize>)> = (0..plan.folds())
        .map(|t| (data.subset(&plan.train_indices(t)), plan.test_indices(t)))
        .collect();
    for (t, (train, _)) in splits.iter().enumerate() {
        if let Some(c) = train.class_counts().iter().position(|&c| c == 0) {
            return Err(Error::MissingClass {
                class: data.catalog().labels()[c].clone(),
                context: Some(format!("training complement of fold {t}")),
            });
        }
    }

    let jobs: Vec<(usize, usize)> = (0..plan.folds())
        .flat_map(|t| (0..learners.len()).map(move |k| (t, k)))
        .collect();
    let outputs: Vec<Vec<Vec<f64>>> = jobs
        .par_iter()
        .map(|&(t, k)| {
            let (train, test) = &splits[t];
            let model = learners[k].fit(train, seed::derive(seed_value, &[t as u64, k as u64]))?;
            test.iter().map(|&i| model.predict_proba(data.row(i))).collect()
        })
        .collect::<Result<_>>()?;

    let k = learners.len();
    let mut rows: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(k); data.len()];
    for (&(t, _), posteriors) in jobs.iter().zip(outputs) {
        for (&i, p) in splits[t].1.iter().zip(posteriors) {
            rows[i].push(p);
        }
    }
    let ids = classifier_ids(learners);
    let profiles = rows
        .into_iter()
        .map(|r| MetaProfile::new(r, ids.clone()))
        .collect::<Result<_>>()?;
    MetaMatrix::new(profiles, data.catalog().clone())
}

/// Misclassification rate of the granular combiner over `meta`.
pub fn error_for_alpha(meta: &MetaMatrix, labels: &[usize], alpha: f64, h: HFunction) -> Result<f64> {
    if labels.len() != meta.len() {
        return Err(Error::LengthMismatch { expected: meta.len(), actual: labels.len() });
    }
    if meta.is_empty() {
        return Err(Error::InvalidParameter("empty meta-matrix".into()));
    }
    GranuleParams::new(alpha)?;
    let mut wrong = 0usize;
    for (profile, &y) in meta.rows().iter().zip(labels) {
        let intervals = granular_intervals(profile, alpha)?;
        if granular_decision(&intervals, alpha, h).class != y {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / meta.len() as f64)
}

/// Grid value with the lowest error (smallest `alpha` on ties) and the full
/// `(alpha, error)` curve.
pub fn select_alpha(
    meta: &MetaMatrix,
    labels: &[usize],
    grid: &AlphaGrid,
    h: HFunction,
) -> Result<(f64, Vec<(f64, f64)>)> {
    let curve = grid
        .values()
        .par_iter()
        .map(|&a| Ok((a, error_for_alpha(meta, labels, a, h)?)))
        .collect::<Result<Vec<_>>>()?;
    let best = curve
        .iter()
        .fold(curve[0], |best, &p| if p.1 < best.1 { p } else { best });
    Ok((best.0, curve))
}

/// Fit every learner on `data`; learner `k` gets seed `derive(seed, [k])`.
pub fn fit_all(data: &Dataset, specs: &[LearnerSpec], seed_value: u64) -> Result<Vec<FittedClassifier>> {
    specs
        .par_iter()
        .enumerate()
        .map(|(k, spec)| spec.fit(data, seed::derive(seed_value, &[k as u64])))
        .collect()
}

/// Profile of `x` under a fitted pool.
pub fn profile_of(classifiers: &[FittedClassifier], ids: &Arc<[String]>, x: &[f64]) -> Result<MetaProfile> {
    let rows = classifiers
        .iter()
        .map(|c| c.predict_proba(x))
        .collect::<Result<Vec<_>>>()?;
    MetaProfile::new(rows, ids.clone())
}

/// A trained granular ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedEnsemble {
    pub classifiers: Vec<FittedClassifier>,
    pub classifier_ids: Vec<String>,
    pub alpha: f64,
    pub h: HFunction,
    pub catalog: ClassCatalog,
    pub alpha_error_curve: Vec<(f64, f64)>,
}

pub const ENSEMBLE_FORMAT: &str = "granulex-ensemble";
pub const ENSEMBLE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Archive {
    format: String,
    version: u32,
    ensemble: TrainedEnsemble,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub profile: Vec<Vec<f64>>,
    pub intervals: IntervalMemberships,
    pub decision: Decision,
}

impl Prediction {
    pub fn class(&self) -> usize {
        self.decision.class
    }
}

impl TrainedEnsemble {
    pub fn n_classifiers(&self) -> usize {
        self.classifiers.len()
    }

    pub fn dim(&self) -> usize {
        self.classifiers.first().map_or(0, FittedClassifier::dim)
    }

    pub fn profile(&self, x: &[f64]) -> Result<MetaProfile> {
        let ids: Arc<[String]> = self.classifier_ids.iter().cloned().collect();
        profile_of(&self.classifiers, &ids, x)
    }

    /// Profile, intervals, memberships and decision for one observation.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let profile = self.profile(x)?;
        let intervals = granular_intervals(&profile, self.alpha)?;
        let decision = granular_decision(&intervals, self.alpha, self.h);
        Ok(Prediction {
            profile: profile.rows().map(<[f64]>::to_vec).collect(),
            intervals,
            decision,
        })
    }

    /// Predictions in input order.
    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        xs.par_iter().map(|x| self.predict(x)).collect()
    }

    /// Versioned JSON archive.
    pub fn to_json(&self) -> Result<String> {
        let archive = Archive {
            format: ENSEMBLE_FORMAT.into(),
            version: ENSEMBLE_VERSION,
            ensemble: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&archive)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let archive: Archive = serde_json::from_str(text)?;
        if archive.format != ENSEMBLE_FORMAT {
            return Err(Error::Format(format!("not an ensemble archive (format '{}')", archive.format)));
        }
        if archive.version != ENSEMBLE_VERSION {
            return Err(Error::Format(format!("unsupported ensemble archive version {}", archive.version)));
        }
        Ok(archive.ensemble)
    }
}

/// Train the granular ensemble on `data`.
///
/// In grid mode the meta-data come from a stratified `folds`-fold CV and the
/// error-minimising `alpha` is kept. In fixed mode no CV is run. Either way
/// the returned classifiers are fitted on the full dataset.
pub fn train(
    data: &Dataset,
    specs: &[LearnerSpec],
    mode: &AlphaMode,
    h: HFunction,
    folds: usize,
    seed_value: u64,
) -> Result<TrainedEnsemble> {
    if specs.len() < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 learners, got {}", specs.len())));
    }
    for spec in specs {
        spec.validate()?;
    }
    let (alpha, alpha_error_curve) = match mode {
        AlphaMode::Fixed(alpha) => (GranuleParams::new(*alpha)?.alpha(), Vec::new()),
        AlphaMode::Grid(grid) => {
            check_stratifiable(data, folds)?;
            let plan = FoldPlan::stratified(data.labels(), folds, seed::derive(seed_value, &[0]))?;
            let meta = generate_meta_cv(data, specs, &plan, seed::derive(seed_value, &[1]))?;
            select_alpha(&meta, data.labels(), grid, h)?
        }
    };
    let classifiers = fit_all(data, specs, seed::derive(seed_value, &[2]))?;
    Ok(TrainedEnsemble {
        classifiers,
        classifier_ids: specs.iter().map(ToString::to_string).collect(),
        alpha,
        h,
        catalog: data.catalog().clone(),
        alpha_error_curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_41_points() {
        let g = AlphaGrid::default();
        assert_eq!(g.len(), 41);
        assert_eq!(g.values()[0], 0.0);
        assert_eq!(g.values()[3], 0.3);
        assert_eq!(g.values()[40], 4.0);
        assert_eq!("0:0.1:4".parse::<AlphaGrid>().unwrap(), g);
    }

    #[test]
    fn grid_validation() {
        assert!(AlphaGrid::new(vec![]).is_err());
        assert!(AlphaGrid::new(vec![0.0, 0.0]).is_err());
        assert!(AlphaGrid::new(vec![1.0, 0.5]).is_err());
        assert!(AlphaGrid::new(vec![-1.0]).is_err());
        assert!("0:0:4".parse::<AlphaGrid>().is_err());
        assert!("0:0.1".parse::<AlphaGrid>().is_err());
        assert_eq!("1:1:1".parse::<AlphaGrid>().unwrap().values(), &[1.0]);
    }

    #[test]
    fn stratified_plan_balances_classes_and_sizes() {
        let labels: Vec<usize> = (0..53).map(|i| if i % 5 == 0 { 1 } else if i % 7 == 0 { 2 } else { 0 }).collect();
        let plan = FoldPlan::stratified(&labels, 4, 3).unwrap();
        let mut sizes = [0usize; 4];
        let mut per_class = [[0usize; 4]; 3];
        for (i, &f) in plan.assignments().iter().enumerate() {
            sizes[f] += 1;
            per_class[labels[i]][f] += 1;
        }
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for counts in per_class {
            assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn plan_rejects_single_fold() {
        assert!(FoldPlan::stratified(&[0, 1, 0, 1], 1, 0).is_err());
        assert!(FoldPlan::from_assignments(vec![0, 2], 2).is_err());
    }

    #[test]
    fn archive_rejects_foreign_formats() {
        let text = r#"{"format":"other","version":1,"ensemble":{}}"#;
        assert!(TrainedEnsemble::from_json(text).is_err());
    }
}
