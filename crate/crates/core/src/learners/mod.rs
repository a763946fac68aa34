//! Base learners emitting soft labels.
//!
//! Every learner maps a feature vector to a posterior row over the catalog
//! classes. Classes missing from the training data get probability 0.
//!
//! | kind | posterior |
//! |------|-----------|
//! | `knn` | neighbour vote fractions |
//! | `gaussian-naive-bayes` | normalised class likelihood x prior |
//! | `lda` | softmax of linear discriminant scores |
//! | `logistic-linear` | multinomial logistic output |
//! | `decision-tree`, `decision-stump` | leaf class proportions |
//! | `nearest-mean` | softmin of distances to class means |
//! | `fisher`, `perceptron` | normalised logistic squashing of class scores |

mod common;
mod dataset;
mod discriminant;
mod knn;
mod logistic;
mod naive_bayes;
mod nearest_mean;
mod perceptron;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use dataset::Dataset;
pub use discriminant::{FisherModel, LdaModel};
pub use knn::KnnModel;
pub use logistic::LogisticModel;
pub use naive_bayes::NaiveBayesModel;
pub use nearest_mean::NearestMeanModel;
pub use perceptron::PerceptronModel;
pub use tree::{Node, TreeModel};

use crate::error::{Error, Result};
use crate::metadata::validate;

/// Something that can be fitted to a dataset and then emits soft labels.
pub trait Learner: Sync {
    type Model: SoftClassifier + Send + Sync;

    fn fit(&self, data: &Dataset, seed: u64) -> Result<Self::Model>;

    fn name(&self) -> String;
}

pub trait SoftClassifier {
    /// Posterior row of length `M`: entries in `[0, 1]` summing to 1.
    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>>;
}

/// A learning algorithm and its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LearnerSpec {
    Knn {
        k: usize,
    },
    GaussianNaiveBayes,
    Lda,
    Fisher,
    LogisticLinear {
        #[serde(default = "defaults::logistic_iterations")]
        iterations: usize,
        #[serde(default = "defaults::logistic_rate")]
        learning_rate: f64,
    },
    DecisionTree {
        #[serde(default = "defaults::tree_depth")]
        max_depth: usize,
        #[serde(default = "defaults::tree_min_leaf")]
        min_leaf: usize,
    },
    DecisionStump,
    NearestMean,
    Perceptron {
        #[serde(default = "defaults::perceptron_epochs")]
        epochs: usize,
        #[serde(default = "defaults::perceptron_rate")]
        learning_rate: f64,
    },
}

mod defaults {
    pub fn logistic_iterations() -> usize {
        500
    }
    pub fn logistic_rate() -> f64 {
        0.1
    }
    pub fn tree_depth() -> usize {
        12
    }
    pub fn tree_min_leaf() -> usize {
        2
    }
    pub fn perceptron_epochs() -> usize {
        20
    }
    pub fn perceptron_rate() -> f64 {
        1.0
    }
}

impl LearnerSpec {
    pub fn knn(k: usize) -> Self {
        Self::Knn { k }
    }

    pub fn logistic_linear() -> Self {
        Self::LogisticLinear { iterations: defaults::logistic_iterations(), learning_rate: defaults::logistic_rate() }
    }

    pub fn decision_tree() -> Self {
        Self::DecisionTree { max_depth: defaults::tree_depth(), min_leaf: defaults::tree_min_leaf() }
    }

    pub fn perceptron() -> Self {
        Self::Perceptron { epochs: defaults::perceptron_epochs(), learning_rate: defaults::perceptron_rate() }
    }

    /// The ten-learner heterogeneous pool.
    pub fn default_roster() -> Vec<Self> {
        vec![
            Self::Lda,
            Self::GaussianNaiveBayes,
            Self::knn(5),
            Self::knn(25),
            Self::knn(50),
            Self::decision_tree(),
            Self::DecisionStump,
            Self::Fisher,
            Self::logistic_linear(),
            Self::NearestMean,
        ]
    }

    /// Default pool plus perceptron and 75-NN.
    pub fn extended_roster() -> Vec<Self> {
        let mut roster = Self::default_roster();
        roster.push(Self::perceptron());
        roster.push(Self::knn(75));
        roster
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("{self}: {what}")));
        match *self {
            Self::Knn { k: 0 } => bad("k must be >= 1"),
            Self::LogisticLinear { iterations, learning_rate } => {
                if iterations == 0 {
                    bad("iterations must be >= 1")
                } else if !(learning_rate > 0.0 && learning_rate.is_finite()) {
                    bad("learning rate must be positive")
                } else {
                    Ok(())
                }
            }
            Self::DecisionTree { max_depth, min_leaf } => {
                if max_depth == 0 {
                    bad("max depth must be >= 1")
                } else if min_leaf == 0 {
                    bad("min leaf must be >= 1")
                } else {
                    Ok(())
                }
            }
            Self::Perceptron { epochs, learning_rate } => {
                if epochs == 0 {
                    bad("epochs must be >= 1")
                } else if !(learning_rate > 0.0 && learning_rate.is_finite()) {
                    bad("learning rate must be positive")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn fit(&self, data: &Dataset, seed: u64) -> Result<FittedClassifier> {
        self.validate()?;
        if data.is_empty() {
            return Err(Error::InvalidDataset("cannot fit on an empty dataset".into()));
        }
        let present = data.class_counts().iter().filter(|&&c| c > 0).count();
        if present < 2 {
            return Err(Error::InvalidDataset(format!(
                "{self} needs at least 2 classes in the training data, found {present}"
            )));
        }
        let model = match *self {
            Self::Knn { k } => Model::Knn(KnnModel::fit(data, k)),
            Self::GaussianNaiveBayes => Model::NaiveBayes(NaiveBayesModel::fit(data)),
            Self::Lda => Model::Lda(LdaModel::fit(data)),
            Self::Fisher => Model::Fisher(FisherModel::fit(data)),
            Self::LogisticLinear { iterations, learning_rate } => {
                Model::Logistic(LogisticModel::fit(data, iterations, learning_rate))
            }
            Self::DecisionTree { max_depth, min_leaf } => Model::Tree(TreeModel::fit(data, max_depth, min_leaf)),
            Self::DecisionStump => Model::Tree(TreeModel::fit(data, 1, 1)),
            Self::NearestMean => Model::NearestMean(NearestMeanModel::fit(data)),
            Self::Perceptron { epochs, learning_rate } => {
                Model::Perceptron(PerceptronModel::fit(data, epochs, learning_rate, seed))
            }
        };
        Ok(FittedClassifier { spec: self.clone(), dim: data.dim(), classes: data.n_classes(), model })
    }
}

/// Compact form: `kind` or `kind:value`, where `value` is the primary
/// hyperparameter (`k`, max depth, iterations or epochs).
impl FromStr for LearnerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = match s.trim().split_once(':') {
            Some((k, v)) => (k, Some(v)),
            None => (s.trim(), None),
        };
        let value = value
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| Error::InvalidParameter(format!("bad learner parameter in '{s}'")))
            })
            .transpose()?;
        let no_value = |spec: Self| match value {
            None => Ok(spec),
            Some(_) => Err(Error::InvalidParameter(format!("learner '{kind}' takes no parameter"))),
        };
        let spec = match kind {
            "knn" => Self::knn(value.ok_or_else(|| Error::InvalidParameter("knn needs k, e.g. knn:5".into()))?),
            "gaussian-naive-bayes" | "naive-bayes" => no_value(Self::GaussianNaiveBayes)?,
            "lda" => no_value(Self::Lda)?,
            "fisher" => no_value(Self::Fisher)?,
            "logistic-linear" => Self::LogisticLinear {
                iterations: value.unwrap_or_else(defaults::logistic_iterations),
                learning_rate: defaults::logistic_rate(),
            },
            "decision-tree" => Self::DecisionTree {
                max_depth: value.unwrap_or_else(defaults::tree_depth),
                min_leaf: defaults::tree_min_leaf(),
            },
            "decision-stump" => no_value(Self::DecisionStump)?,
            "nearest-mean" => no_value(Self::NearestMean)?,
            "perceptron" => Self::Perceptron {
                epochs: value.unwrap_or_else(defaults::perceptron_epochs),
                learning_rate: defaults::perceptron_rate(),
            },
            other => return Err(Error::InvalidParameter(format!("unknown learner kind '{other}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Knn { k } => write!(f, "knn{k}"),
            Self::GaussianNaiveBayes => f.write_str("naive-bayes"),
            Self::Lda => f.write_str("lda"),
            Self::Fisher => f.write_str("fisher"),
            Self::LogisticLinear { .. } => f.write_str("logistic-linear"),
            Self::DecisionTree { .. } => f.write_str("decision-tree"),
            Self::DecisionStump => f.write_str("decision-stump"),
            Self::NearestMean => f.write_str("nearest-mean"),
            Self::Perceptron { .. } => f.write_str("perceptron"),
        }
    }
}

impl Learner for LearnerSpec {
    type Model = FittedClassifier;

    fn fit(&self, data: &Dataset, seed: u64) -> Result<FittedClassifier> {
        LearnerSpec::fit(self, data, seed)
    }

    fn name(&self) -> String {
        self.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "state", rename_all = "kebab-case")]
pub enum Model {
    Knn(KnnModel),
    NaiveBayes(NaiveBayesModel),
    Lda(LdaModel),
    Fisher(FisherModel),
    Logistic(LogisticModel),
    Tree(TreeModel),
    NearestMean(NearestMeanModel),
    Perceptron(PerceptronModel),
}

/// A fitted base classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedClassifier {
    spec: LearnerSpec,
    dim: usize,
    classes: usize,
    model: Model,
}

impl FittedClassifier {
    pub fn spec(&self) -> &LearnerSpec {
        &self.spec
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.classes
    }

    /// Class with the largest posterior, lowest index on ties.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(crate::combiners::argmax(&self.predict_proba(x)?))
    }
}

impl SoftClassifier for FittedClassifier {
    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::LengthMismatch { expected: self.dim, actual: x.len() });
        }
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        let raw = match &self.model {
            Model::Knn(m) => m.posterior(x),
            Model::NaiveBayes(m) => m.posterior(x),
            Model::Lda(m) => m.posterior(x),
            Model::Fisher(m) => m.posterior(x),
            Model::Logistic(m) => m.posterior(x),
            Model::Tree(m) => m.posterior(x),
            Model::NearestMean(m) => m.posterior(x),
            Model::Perceptron(m) => m.posterior(x),
        };
        let mut rows = vec![raw];
        validate(&mut rows).map_err(Error::InvalidProfile)?;
        Ok(rows.pop().unwrap_or_default())
    }
}

#[cfg(test)]
mod tests;
