//! Turning a meta profile into a class decision.
//!
//! Every combiner yields a membership vector over the classes and decides
//! by its argmax, breaking ties toward the lowest class index.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::granule::{construct_granule, median_sorted, Granule, GranuleParams};
use crate::metadata::{MetaMatrix, MetaProfile};

/// Index of the largest value; the lowest index wins ties. NaNs never win.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] || values[best].is_nan() {
            best = i;
        }
    }
    best
}

/// The six fixed combining rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedRule {
    Sum,
    Product,
    Max,
    Min,
    Median,
    MajorityVote,
}

impl FixedRule {
    pub const ALL: [FixedRule; 6] = [
        FixedRule::Sum,
        FixedRule::Product,
        FixedRule::Max,
        FixedRule::Min,
        FixedRule::Median,
        FixedRule::MajorityVote,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sum => "sum",
            Self::Product => "product",
            Self::Max => "max",
            Self::Min => "min",
            Self::Median => "median",
            Self::MajorityVote => "majority-vote",
        }
    }
}

impl fmt::Display for FixedRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FixedRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown fixed rule '{s}'")))
    }
}

/// De-granulation weight applied to an interval's length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HFunction {
    /// Constant 1.
    H1,
    /// `1 / length`, guarded below by [`H2_MIN_LENGTH`].
    H2,
    /// `exp(-length)`.
    #[default]
    H3,
}

/// Lower bound on the length `h2` divides by.
pub const H2_MIN_LENGTH: f64 = 1e-12;

impl HFunction {
    pub const ALL: [HFunction; 3] = [HFunction::H1, HFunction::H2, HFunction::H3];

    pub fn weight(self, length: f64) -> f64 {
        match self {
            Self::H1 => 1.0,
            Self::H2 => 1.0 / length.max(H2_MIN_LENGTH),
            Self::H3 => (-length).exp(),
        }
    }
}

impl fmt::Display for HFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::H1 => "h1",
            Self::H2 => "h2",
            Self::H3 => "h3",
        })
    }
}

impl FromStr for HFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "h1" => Ok(Self::H1),
            "h2" => Ok(Self::H2),
            "h3" => Ok(Self::H3),
            other => Err(Error::InvalidParameter(format!("unknown h-function '{other}' (expected h1, h2 or h3)"))),
        }
    }
}

/// Which combiner produced a membership vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "combiner", rename_all = "kebab-case")]
pub enum RuleTag {
    Fixed { rule: FixedRule },
    DecisionTemplate,
    Granular { alpha: f64, h: HFunction },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMembershipVector {
    pub values: Vec<f64>,
    pub rule: RuleTag,
}

/// Memberships plus the winning class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub memberships: ClassMembershipVector,
    pub class: usize,
}

impl Decision {
    fn new(values: Vec<f64>, rule: RuleTag) -> Self {
        let class = argmax(&values);
        Self { memberships: ClassMembershipVector { values, rule }, class }
    }
}

fn column_median(profile: &MetaProfile, m: usize) -> f64 {
    let mut column = profile.column(m);
    column.sort_by(f64::total_cmp);
    median_sorted(&column)
}

pub fn fixed_rule_classify(profile: &MetaProfile, rule: FixedRule) -> Decision {
    let m = profile.n_classes();
    let fold = |init: f64, op: fn(f64, f64) -> f64| -> Vec<f64> {
        (0..m).map(|c| profile.rows().fold(init, |acc, r| op(acc, r[c]))).collect()
    };
    let values = match rule {
        FixedRule::Sum => fold(0.0, |a, b| a + b),
        FixedRule::Product => fold(1.0, |a, b| a * b),
        FixedRule::Max => fold(f64::NEG_INFINITY, f64::max),
        FixedRule::Min => fold(f64::INFINITY, f64::min),
        FixedRule::Median => (0..m).map(|c| column_median(profile, c)).collect(),
        FixedRule::MajorityVote => {
            let mut votes = vec![0.0; m];
            for row in profile.rows() {
                votes[argmax(row)] += 1.0;
            }
            votes
        }
    };
    Decision::new(values, RuleTag::Fixed { rule })
}

/// Per-class interval memberships.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalMemberships {
    pub granules: Vec<Granule>,
}

/// Build one granule per class column of `profile`.
pub fn granular_intervals(profile: &MetaProfile, alpha: f64) -> Result<IntervalMemberships> {
    let params = GranuleParams::new(alpha)?;
    let granules = (0..profile.n_classes())
        .map(|m| construct_granule(&profile.column_sample(m)?, params))
        .collect::<Result<_>>()?;
    Ok(IntervalMemberships { granules })
}

/// Numerical class membership: interval midpoint times `h(length)`.
pub fn ncm(interval: &Granule, h: HFunction) -> f64 {
    interval.midpoint() * h.weight(interval.length())
}

pub fn granular_decision(intervals: &IntervalMemberships, alpha: f64, h: HFunction) -> Decision {
    let values = intervals.granules.iter().map(|g| ncm(g, h)).collect();
    Decision::new(values, RuleTag::Granular { alpha, h })
}

pub fn granular_classify(profile: &MetaProfile, alpha: f64, h: HFunction) -> Result<Decision> {
    let intervals = granular_intervals(profile, alpha)?;
    Ok(granular_decision(&intervals, alpha, h))
}

/// One `K x M` template per class: the mean training profile of that class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTemplateModel {
    classifiers: usize,
    classes: usize,
    templates: Vec<Vec<f64>>,
}

impl DecisionTemplateModel {
    pub fn templates(&self) -> &[Vec<f64>] {
        &self.templates
    }
}

pub fn dt_fit(meta: &MetaMatrix, labels: &[usize]) -> Result<DecisionTemplateModel> {
    if labels.len() != meta.len() {
        return Err(Error::LengthMismatch { expected: meta.len(), actual: labels.len() });
    }
    let classes = meta.catalog().len();
    let classifiers = meta.n_classifiers();
    let width = classes * classifiers;
    let mut sums = vec![vec![0.0; width]; classes];
    let mut counts = vec![0usize; classes];
    for (profile, &y) in meta.rows().iter().zip(labels) {
        if y >= classes {
            return Err(Error::IndexOutOfRange { index: y, len: classes });
        }
        counts[y] += 1;
        for (s, v) in sums[y].iter_mut().zip(profile.scores()) {
            *s += v;
        }
    }
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(Error::MissingClass {
            class: meta.catalog().labels()[c].clone(),
            context: Some("decision template training data".into()),
        });
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        s.iter_mut().for_each(|v| *v /= c as f64);
    }
    Ok(DecisionTemplateModel { classifiers, classes, templates: sums })
}

/// Fuzzy Jaccard similarity: `sum(min) / sum(max)`, defined as 1 when both
/// matrices are all zero.
pub fn s1_similarity(a: &[f64], b: &[f64]) -> f64 {
    let (inter, union) = a
        .iter()
        .zip(b)
        .fold((0.0, 0.0), |(i, u), (&x, &y)| (i + x.min(y), u + x.max(y)));
    if union == 0.0 {
        1.0
    } else {
        inter / union
    }
}

pub fn dt_classify(model: &DecisionTemplateModel, profile: &MetaProfile) -> Result<Decision> {
    if profile.n_classes() != model.classes || profile.n_classifiers() != model.classifiers {
        return Err(Error::ShapeMismatch(format!(
            "profile is {}x{}, templates are {}x{}",
            profile.n_classifiers(),
            profile.n_classes(),
            model.classifiers,
            model.classes
        )));
    }
    let values = model
        .templates
        .iter()
        .map(|t| s1_similarity(profile.scores(), t))
        .collect();
    Ok(Decision::new(values, RuleTag::DecisionTemplate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metadata::ClassCatalog;
    use approx::assert_relative_eq;

    fn worked() -> MetaProfile {
        MetaProfile::from_rows(vec![vec![0.6, 0.4], vec![0.7, 0.3], vec![0.35, 0.65]]).unwrap()
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[f64::NAN, 0.1]), 1);
    }

    #[test]
    fn fixed_rules_on_worked_profile() {
        let p = worked();
        let expect: [(FixedRule, [f64; 2]); 6] = [
            (FixedRule::Sum, [1.65, 1.35]),
            (FixedRule::Product, [0.147, 0.078]),
            (FixedRule::Max, [0.7, 0.65]),
            (FixedRule::Min, [0.35, 0.3]),
            (FixedRule::Median, [0.6, 0.4]),
            (FixedRule::MajorityVote, [2.0, 1.0]),
        ];
        for (rule, scores) in expect {
            let d = fixed_rule_classify(&p, rule);
            assert_eq!(d.class, 0, "{rule}");
            for (got, want) in d.memberships.values.iter().zip(scores) {
                assert_relative_eq!(*got, want, epsilon = 1e-12);
            }
            assert_eq!(d.memberships.rule, RuleTag::Fixed { rule });
        }
    }

    #[test]
    fn identical_columns_tie_to_class_zero() {
        let p = MetaProfile::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        for rule in FixedRule::ALL {
            assert_eq!(fixed_rule_classify(&p, rule).class, 0);
        }
        for h in HFunction::ALL {
            assert_eq!(granular_classify(&p, 1.0, h).unwrap().class, 0);
        }
    }

    #[test]
    fn ncm_examples() {
        let g = Granule { lower: 0.4, upper: 0.8, alpha: 1.0 };
        assert_relative_eq!(ncm(&g, HFunction::H1), 0.6, epsilon = 1e-15);
        assert_relative_eq!(ncm(&g, HFunction::H3), 0.6 * (-0.4f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(ncm(&g, HFunction::H3), 0.40219, epsilon = 1e-5);
        assert_relative_eq!(ncm(&g, HFunction::H2), 1.5, epsilon = 1e-12);
        let point = Granule { lower: 0.7, upper: 0.7, alpha: 1.0 };
        assert_eq!(ncm(&point, HFunction::H2), 0.7 / 1e-12);
    }

    #[test]
    fn granular_intervals_on_worked_profile() {
        // Class 0 column {0.6, 0.7, 0.35}: V(0.7) = 2e^-0.1 > 1, V(0.35) = 2e^-0.25 > 1.
        let iv = granular_intervals(&worked(), 1.0).unwrap();
        assert_eq!((iv.granules[0].lower, iv.granules[0].upper), (0.35, 0.7));
        assert_eq!((iv.granules[1].lower, iv.granules[1].upper), (0.3, 0.65));
    }

    #[test]
    fn unanimous_profile_gives_point_intervals() {
        let p = MetaProfile::from_rows(vec![vec![0.2, 0.8]; 4]).unwrap();
        let iv = granular_intervals(&p, 0.5).unwrap();
        assert!(iv.granules.iter().all(|g| g.length() == 0.0));
    }

    #[test]
    fn granular_rejects_negative_alpha() {
        assert!(granular_classify(&worked(), -1.0, HFunction::H3).is_err());
    }

    #[test]
    fn decision_template_examples() {
        let catalog = ClassCatalog::new(["A", "B"]).unwrap();
        let a = MetaProfile::from_rows(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let b = MetaProfile::from_rows(vec![vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let c = MetaProfile::from_rows(vec![vec![0.2, 0.8], vec![0.4, 0.6]]).unwrap();
        let meta = MetaMatrix::new(vec![a.clone(), b.clone(), c.clone()], catalog).unwrap();
        let model = dt_fit(&meta, &[0, 1, 1]).unwrap();
        // Class 0 has the single profile `a`; class 1 averages `b` and `c`.
        assert_eq!(model.templates()[0], a.scores());
        let mid: Vec<f64> = b.scores().iter().zip(c.scores()).map(|(x, y)| (x + y) / 2.0).collect();
        assert_eq!(model.templates()[1], mid);

        let d = dt_classify(&model, &a).unwrap();
        assert_eq!(d.memberships.values[0], 1.0);
        assert_eq!(d.class, 0);
    }

    #[test]
    fn decision_template_midpoint() {
        let catalog = ClassCatalog::new(["A", "B"]).unwrap();
        let a = MetaProfile::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let b = MetaProfile::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let meta = MetaMatrix::new(vec![a.clone(), b, a], catalog).unwrap();
        let model = dt_fit(&meta, &[0, 0, 1]).unwrap();
        assert_eq!(model.templates()[0], vec![0.5; 4]);
    }

    #[test]
    fn s1_examples() {
        assert_relative_eq!(s1_similarity(&[0.6, 0.4], &[0.5, 0.5]), 0.9 / 1.1, epsilon = 1e-12);
        assert_eq!(s1_similarity(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert_eq!(s1_similarity(&[0.3, 0.7], &[0.3, 0.7]), 1.0);
        assert_eq!(s1_similarity(&[0.0, 0.0], &[0.0, 0.0]), 1.0);
    }

    #[test]
    fn dt_fit_names_missing_class() {
        let catalog = ClassCatalog::new(["A", "B"]).unwrap();
        let meta = MetaMatrix::new(vec![worked()], catalog).unwrap();
        let err = dt_fit(&meta, &[0]).unwrap_err();
        assert!(err.to_string().contains("'B'"));
    }

    #[test]
    fn dt_classify_rejects_shape_mismatch() {
        let catalog = ClassCatalog::new(["A", "B"]).unwrap();
        let meta = MetaMatrix::new(vec![worked(), worked()], catalog).unwrap();
        let model = dt_fit(&meta, &[0, 1]).unwrap();
        let small = MetaProfile::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(matches!(dt_classify(&model, &small), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn parse_names() {
        assert_eq!("majority-vote".parse::<FixedRule>().unwrap(), FixedRule::MajorityVote);
        assert_eq!("h2".parse::<HFunction>().unwrap(), HFunction::H2);
        assert!("h4".parse::<HFunction>().is_err());
        assert_eq!(HFunction::default(), HFunction::H3);
    }
}
