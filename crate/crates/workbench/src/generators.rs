//! Deterministic synthetic datasets.
//!
//! | kind               | classes | construction                                                    |
//! |--------------------|---------|-----------------------------------------------------------------|
//! | `two-gaussians`    | `M`     | means at radius `separation/2` (M=2: `±separation/2` on axis 0), noise `N(0, noise²)` per axis |
//! | `twonorm-like`     | 2       | means `±(a, …, a)` with `a = 2/√d`, noise `N(0, noise²)` per axis |
//! | `concentric-rings` | `M`     | class `c` on the circle of radius `c + 1` in axes 0-1, radial and extra-axis noise `N(0, noise²)` |
//!
//! Labels cycle through the classes (`i mod M`), so class sizes differ by at
//! most one. Class names are `y1 … yM`.

use std::f64::consts::PI;

use granulex::learners::Dataset;
use granulex::metadata::ClassCatalog;
use granulex::seed;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::WorkbenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    TwoGaussians,
    TwonormLike,
    ConcentricRings,
}

impl GeneratorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::TwoGaussians => "two-gaussians",
            Self::TwonormLike => "twonorm-like",
            Self::ConcentricRings => "concentric-rings",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    pub d: usize,
    #[serde(default = "GeneratorSpec::default_noise")]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "GeneratorSpec::default_classes")]
    pub classes: usize,
    /// Distance between class means, used by `two-gaussians`.
    #[serde(default = "GeneratorSpec::default_separation")]
    pub separation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl GeneratorSpec {
    fn default_noise() -> f64 {
        1.0
    }

    fn default_classes() -> usize {
        2
    }

    fn default_separation() -> f64 {
        4.0
    }

    pub fn new(kind: GeneratorKind, n: usize, d: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            d,
            noise: Self::default_noise(),
            seed,
            classes: Self::default_classes(),
            separation: Self::default_separation(),
            name: None,
        }
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_classes(mut self, classes: usize) -> Self {
        self.classes = classes;
        self
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            format!("{}-n{}-d{}-s{}", self.kind.as_str(), self.n, self.d, self.seed)
        })
    }

    pub fn validate(&self) -> Result<(), WorkbenchError> {
        let bad = |m: String| Err(WorkbenchError::Config(format!("generator {}: {m}", self.kind.as_str())));
        if self.d < 1 {
            return bad("d must be >= 1".into());
        }
        if self.classes < 2 {
            return bad(format!("classes must be >= 2, got {}", self.classes));
        }
        if self.kind == GeneratorKind::TwonormLike && self.classes != 2 {
            return bad("twonorm-like has exactly 2 classes".into());
        }
        if self.kind == GeneratorKind::ConcentricRings && self.d < 2 {
            return bad("concentric-rings needs d >= 2".into());
        }
        if self.n < 2 * self.classes {
            return bad(format!("n must be >= 2 x classes, got {}", self.n));
        }
        if !(self.noise.is_finite() && self.noise > 0.0) {
            return bad(format!("noise must be finite and > 0, got {}", self.noise));
        }
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return bad(format!("separation must be finite and >= 0, got {}", self.separation));
        }
        Ok(())
    }
}

/// Generate the dataset described by `spec`.
pub fn generate(spec: &GeneratorSpec) -> Result<Dataset, WorkbenchError> {
    spec.validate()?;
    let mut rng = seed::rng(spec.seed);
    let noise = Normal::new(0.0, spec.noise).expect("noise validated");
    let m = spec.classes;
    let mut rows = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let c = i % m;
        let mut x: Vec<f64> = (0..spec.d).map(|_| noise.sample(&mut rng)).collect();
        match spec.kind {
            GeneratorKind::TwoGaussians => {
                let center = gaussian_center(c, m, spec.d, spec.separation / 2.0);
                x.iter_mut().zip(center).for_each(|(v, mu)| *v += mu);
            }
            GeneratorKind::TwonormLike => {
                let a = 2.0 / (spec.d as f64).sqrt();
                let sign = if c == 0 { 1.0 } else { -1.0 };
                x.iter_mut().for_each(|v| *v += sign * a);
            }
            GeneratorKind::ConcentricRings => {
                let theta = rng.random::<f64>() * 2.0 * PI;
                let radius = (c + 1) as f64 + x[0];
                x[0] = radius * theta.cos();
                x[1] = radius * theta.sin();
            }
        }
        rows.push(x);
        labels.push(c);
    }
    Ok(Dataset::new(spec.display_name(), rows, labels, ClassCatalog::numbered(m)?)?)
}

fn gaussian_center(c: usize, m: usize, d: usize, radius: f64) -> Vec<f64> {
    let mut center = vec![0.0; d];
    if m == 2 {
        center[0] = if c == 0 { radius } else { -radius };
    } else if d == 1 {
        center[0] = radius * (2.0 * c as f64 / (m - 1) as f64 - 1.0);
    } else {
        let theta = 2.0 * PI * c as f64 / m as f64;
        center[0] = radius * theta.cos();
        center[1] = radius * theta.sin();
    }
    center
}
