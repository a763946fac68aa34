//! Experiment configuration.
//!
//! Precedence, lowest first: built-in defaults, the JSON config file,
//! command-line flags. The resolved configuration is echoed into every
//! evaluation report and can be fed back in unchanged.

use std::path::{Path, PathBuf};

use granulex::combiners::HFunction;
use granulex::evaluation::{MethodSpec, ProtocolConfig};
use granulex::learners::{Dataset, LearnerSpec};
use granulex::training::{AlphaGrid, AlphaMode};
use serde::{Deserialize, Deserializer, Serialize};

use crate::data::{self, LabelColumn};
use crate::generators::{generate, GeneratorSpec};
use crate::WorkbenchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSource {
    pub path: PathBuf,
    #[serde(default)]
    pub label_column: LabelColumn,
    #[serde(default = "yes")]
    pub header: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

fn yes() -> bool {
    true
}

/// Where a dataset comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetSource {
    Csv(CsvSource),
    Bundled(String),
    Generate(GeneratorSpec),
}

impl DatasetSource {
    /// `bundled:<name>` or a CSV path.
    pub fn from_arg(arg: &str, label_column: Option<&LabelColumn>) -> Self {
        match arg.strip_prefix("bundled:") {
            Some(name) => Self::Bundled(name.to_string()),
            None => Self::Csv(CsvSource {
                path: PathBuf::from(arg),
                label_column: label_column.cloned().unwrap_or_default(),
                header: true,
                name: None,
            }),
        }
    }

    pub fn load(&self) -> Result<Dataset, WorkbenchError> {
        match self {
            Self::Csv(src) => {
                let data = data::load_csv(&src.path, &src.label_column, src.header)?;
                Ok(match &src.name {
                    Some(name) => data.with_name(name.clone()),
                    None => data,
                })
            }
            Self::Bundled(name) => data::bundled(name),
            Self::Generate(spec) => generate(spec),
        }
    }
}

fn learner_list<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<LearnerSpec>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Compact(String),
        Full(LearnerSpec),
    }
    Vec::<Entry>::deserialize(de)?
        .into_iter()
        .map(|e| match e {
            Entry::Compact(s) => s.parse().map_err(serde::de::Error::custom),
            Entry::Full(spec) => Ok(spec),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSource>,
    /// Learner objects or compact strings such as `"knn:5"`.
    #[serde(deserialize_with = "learner_list")]
    pub learners: Vec<LearnerSpec>,
    pub methods: Vec<MethodSpec>,
    pub alpha: AlphaMode,
    pub h: HFunction,
    pub folds: usize,
    pub inner_folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub significance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let protocol = ProtocolConfig::default();
        Self {
            datasets: Vec::new(),
            learners: protocol.learners,
            methods: protocol.methods,
            alpha: AlphaMode::default(),
            h: protocol.h,
            folds: protocol.folds,
            inner_folds: protocol.inner_folds,
            repeats: protocol.repeats,
            seed: protocol.seed,
            significance: protocol.significance,
            output: None,
        }
    }
}

/// Command-line values that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub data: Vec<String>,
    pub label_column: Option<LabelColumn>,
    pub folds: Option<usize>,
    pub repeats: Option<usize>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub grid: Option<AlphaGrid>,
    pub h: Option<HFunction>,
    pub learners: Option<Vec<LearnerSpec>>,
    pub methods: Option<Vec<MethodSpec>>,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, WorkbenchError> {
        serde_json::from_str(text).map_err(|e| WorkbenchError::Config(e.to_string()))
    }

    /// Read a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn from_file(path: &Path) -> Result<Self, WorkbenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| WorkbenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config =
            Self::from_json(&text).map_err(|e| WorkbenchError::Config(format!("{}: {}", path.display(), e.message())))?;
        let base = absolute(path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")))?;
        for source in &mut config.datasets {
            if let DatasetSource::Csv(src) = source {
                src.path = base.join(&src.path);
            }
        }
        if let Some(out) = &mut config.output {
            *out = base.join(&*out);
        }
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: Overrides) -> Result<(), WorkbenchError> {
        if !o.data.is_empty() {
            self.datasets = o
                .data
                .iter()
                .map(|d| DatasetSource::from_arg(d, o.label_column.as_ref()))
                .collect();
        } else if let Some(column) = &o.label_column {
            for source in &mut self.datasets {
                if let DatasetSource::Csv(src) = source {
                    src.label_column = column.clone();
                }
            }
        }
        for source in &mut self.datasets {
            if let DatasetSource::Csv(src) = source {
                src.path = absolute(&src.path)?;
            }
        }
        if let Some(v) = o.folds {
            self.folds = v;
        }
        if let Some(v) = o.repeats {
            self.repeats = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        match (o.alpha, o.grid) {
            (Some(_), Some(_)) => return Err(WorkbenchError::Usage("--alpha and --grid are mutually exclusive".into())),
            (Some(a), None) => self.alpha = AlphaMode::Fixed(a),
            (None, Some(g)) => self.alpha = AlphaMode::Grid(g),
            (None, None) => {}
        }
        if let Some(v) = o.h {
            self.h = v;
        }
        if let Some(v) = o.learners {
            self.learners = v;
        }
        if let Some(v) = o.methods {
            self.methods = v;
        }
        if let Some(v) = o.output {
            self.output = Some(absolute(&v)?);
        }
        Ok(())
    }

    /// Checks that do not need the data.
    pub fn validate(&self) -> Result<(), WorkbenchError> {
        if self.datasets.is_empty() {
            return Err(WorkbenchError::Usage("no datasets given (use --data or a config file)".into()));
        }
        if let AlphaMode::Fixed(a) = self.alpha {
            if !(a.is_finite() && a >= 0.0) {
                return Err(WorkbenchError::Config(format!("alpha must be finite and >= 0, got {a}")));
            }
        }
        for source in &self.datasets {
            if let DatasetSource::Generate(spec) = source {
                spec.validate()?;
                if spec.n < self.folds * spec.classes {
                    return Err(WorkbenchError::Config(format!(
                        "generator {}: n = {} is below folds x classes = {}",
                        spec.display_name(),
                        spec.n,
                        self.folds * spec.classes
                    )));
                }
            }
        }
        self.protocol()?.validate()?;
        Ok(())
    }

    pub fn grid(&self) -> Option<&AlphaGrid> {
        match &self.alpha {
            AlphaMode::Grid(g) => Some(g),
            AlphaMode::Fixed(_) => None,
        }
    }

    /// The evaluation protocol. `granular-cv` needs grid mode.
    pub fn protocol(&self) -> Result<ProtocolConfig, WorkbenchError> {
        let grid = match &self.alpha {
            AlphaMode::Grid(g) => g.clone(),
            AlphaMode::Fixed(a) => {
                if self.methods.contains(&MethodSpec::GranularCv) {
                    return Err(WorkbenchError::Config(format!(
                        "granular-cv searches a grid but alpha is fixed at {a}; use granular-fixed:{a} instead"
                    )));
                }
                AlphaGrid::default()
            }
        };
        Ok(ProtocolConfig {
            folds: self.folds,
            repeats: self.repeats,
            seed: self.seed,
            significance: self.significance,
            inner_folds: self.inner_folds,
            learners: self.learners.clone(),
            methods: self.methods.clone(),
            grid,
            h: self.h,
        })
    }

    pub fn load_datasets(&self) -> Result<Vec<Dataset>, WorkbenchError> {
        self.datasets.iter().map(DatasetSource::load).collect()
    }
}

fn absolute(path: &Path) -> Result<PathBuf, WorkbenchError> {
    std::path::absolute(path).map_err(|e| WorkbenchError::Config(format!("cannot resolve {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::GeneratorKind;

    #[test]
    fn defaults_fill_missing_keys() {
        let config = ExperimentConfig::from_json(r#"{"datasets": [{"bundled": "iris"}]}"#).unwrap();
        assert_eq!(config.folds, 10);
        assert_eq!(config.repeats, 10);
        assert_eq!(config.learners.len(), 10);
        config.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"fold": 3}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"datasets": [{"csv": {"path": "a.csv", "sep": ";"}}]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"datasets": [{"generate": {"kind": "two-gaussians", "n": 10, "d": 2, "mu": 1}}]}"#).is_err());
    }

    #[test]
    fn compact_and_full_learners() {
        let config =
            ExperimentConfig::from_json(r#"{"learners": ["knn:3", {"kind": "lda"}, "naive-bayes"]}"#).unwrap();
        assert_eq!(config.learners, vec![LearnerSpec::knn(3), LearnerSpec::Lda, LearnerSpec::GaussianNaiveBayes]);
    }

    #[test]
    fn echo_round_trips() {
        let mut config = ExperimentConfig::default();
        config.datasets.push(DatasetSource::Generate(GeneratorSpec::new(GeneratorKind::TwoGaussians, 100, 2, 7)));
        config.datasets.push(DatasetSource::Bundled("wine".into()));
        config.alpha = AlphaMode::Grid("0:0.5:2".parse().unwrap());
        let back = ExperimentConfig::from_json(&config.to_json()).unwrap();
        assert_eq!(back, config);
        assert_eq!(back.to_json(), config.to_json());
    }

    #[test]
    fn flags_override_file() {
        let mut config = ExperimentConfig::from_json(r#"{"folds": 5, "seed": 3}"#).unwrap();
        config
            .apply(Overrides { folds: Some(4), alpha: Some(0.5), ..Default::default() })
            .unwrap();
        assert_eq!((config.folds, config.seed), (4, 3));
        assert_eq!(config.alpha, AlphaMode::Fixed(0.5));
        let err = config.apply(Overrides { alpha: Some(1.0), grid: Some(AlphaGrid::default()), ..Default::default() });
        assert!(err.is_err());
    }

    #[test]
    fn fixed_alpha_conflicts_with_cv_method() {
        let mut config = ExperimentConfig { alpha: AlphaMode::Fixed(1.0), ..Default::default() };
        config.datasets.push(DatasetSource::Bundled("iris".into()));
        assert!(config.validate().is_err());
        config.methods.retain(|m| *m != MethodSpec::GranularCv);
        config.validate().unwrap();
    }

    #[test]
    fn small_generator_rejected() {
        let mut config = ExperimentConfig::default();
        config.datasets.push(DatasetSource::Generate(GeneratorSpec::new(GeneratorKind::TwoGaussians, 12, 2, 7)));
        assert!(config.validate().is_err());
    }
}
