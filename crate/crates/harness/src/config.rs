//! JSON experiment configuration.
//!
//! Every struct rejects unknown fields, and sections an experiment does not
//! read are rejected too, so a typo can never silently fall back to a default.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use v0init_core::init::{DEFAULT_DATA_SIGMA, DEFAULT_RANDOM_SIGMA};
use v0init_core::objectives::SwitchRule;
use v0init_core::{InitStrategy, OptimizerConfig};

use crate::error::{HarnessError, Result};
use crate::output::MANIFEST_FORMAT;

pub const DEFAULT_OUTPUT_DIR: &str = "out";
/// The saddle iteration count is not pinned down anywhere; 500 lets every method settle.
pub const DEFAULT_SADDLE_STEPS: u64 = 500;
pub const DEFAULT_NGOS_STEPS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Saddle,
    Ngos,
    ExpdecayImportance,
    Mlp,
    Landscape,
    Quadratic,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Saddle => "saddle",
            Experiment::Ngos => "ngos",
            Experiment::ExpdecayImportance => "expdecay-importance",
            Experiment::Mlp => "mlp",
            Experiment::Landscape => "landscape",
            Experiment::Quadratic => "quadratic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum V0Kind {
    Zero,
    Random,
    Data,
    Const,
}

/// `{"kind": ..., "sigma": ..., "lambda": ...}`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct V0Section {
    pub kind: V0Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

impl Default for V0Section {
    fn default() -> Self {
        V0Section {
            kind: V0Kind::Zero,
            sigma: None,
            lambda: None,
        }
    }
}

impl V0Section {
    pub fn strategy(&self) -> Result<InitStrategy> {
        let strategy = match self.kind {
            V0Kind::Zero => {
                self.forbid_sigma()?;
                self.forbid_lambda()?;
                InitStrategy::Zero
            }
            V0Kind::Random => {
                self.forbid_lambda()?;
                InitStrategy::Random {
                    sigma: self.sigma.unwrap_or(DEFAULT_RANDOM_SIGMA),
                }
            }
            V0Kind::Data => {
                self.forbid_lambda()?;
                InitStrategy::DataDriven {
                    sigma: self.sigma.unwrap_or(DEFAULT_DATA_SIGMA),
                }
            }
            V0Kind::Const => {
                self.forbid_sigma()?;
                let lambda = self
                    .lambda
                    .ok_or_else(|| HarnessError::config("v0 kind `const` needs `lambda`"))?;
                InitStrategy::Constant { lambda }
            }
        };
        strategy.validate().map_err(HarnessError::from_validation)?;
        Ok(strategy)
    }

    /// The same strategy with every default written out.
    pub fn resolved(&self) -> Result<V0Section> {
        Ok(match self.strategy()? {
            InitStrategy::Zero => V0Section::default(),
            InitStrategy::Random { sigma } => V0Section {
                kind: V0Kind::Random,
                sigma: Some(sigma),
                lambda: None,
            },
            InitStrategy::DataDriven { sigma } => V0Section {
                kind: V0Kind::Data,
                sigma: Some(sigma),
                lambda: None,
            },
            InitStrategy::Constant { lambda } => V0Section {
                kind: V0Kind::Const,
                sigma: None,
                lambda: Some(lambda),
            },
        })
    }

    fn forbid_sigma(&self) -> Result<()> {
        match self.sigma {
            Some(_) => Err(HarnessError::config(format!(
                "v0 kind `{:?}` does not take `sigma`",
                self.kind
            ))),
            None => Ok(()),
        }
    }

    fn forbid_lambda(&self) -> Result<()> {
        match self.lambda {
            Some(_) => Err(HarnessError::config(format!(
                "v0 kind `{:?}` does not take `lambda`",
                self.kind
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaddleSection {
    pub n: u32,
    pub b: f64,
    pub s: f64,
    pub x0: f64,
    /// Which side of the bias the polynomial/quadratic switch sits on.
    pub switch: SwitchRule,
}

impl Default for SaddleSection {
    fn default() -> Self {
        SaddleSection {
            n: 7,
            b: 1.0,
            s: 0.5,
            x0: -1e-6,
            switch: SwitchRule::Inner,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NgosSection {
    /// Mean gradient, one entry per coordinate.
    pub gbar: Vec<f64>,
    pub sigma_n: f64,
    /// Number of simulated trajectories.
    pub trials: u64,
    /// Pair every noise path with its negation.
    pub antithetic: bool,
    /// Oracle draws used by the data-driven initializer.
    pub data_samples: usize,
}

impl Default for NgosSection {
    fn default() -> Self {
        NgosSection {
            gbar: vec![0.1],
            sigma_n: 1.0,
            trials: 10_000,
            antithetic: true,
            data_samples: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpdecaySection {
    pub beta1: f64,
    pub beta2: f64,
    pub r: f64,
    /// Magnitude of the first gradient.
    pub g1: f64,
    #[serde(alias = "T_max")]
    pub t_max: usize,
    /// Epsilon of the simulated Adam run; 0 gives exact equality with the bound.
    pub eps: f64,
}

impl Default for ExpdecaySection {
    fn default() -> Self {
        ExpdecaySection {
            beta1: 0.9,
            beta2: 0.999,
            r: 0.5,
            g1: 1.0,
            t_max: 200,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpSection {
    pub batch_size: usize,
    pub epochs: usize,
    pub input_dim: usize,
    pub hidden: usize,
    pub n_train: usize,
    pub separation: f64,
    /// Seed of the synthetic dataset, kept apart from the run seed so seed sweeps share data.
    pub data_seed: u64,
    /// Training samples whose gradients feed the data-driven initializer.
    pub data_samples: usize,
    pub dump_dataset: bool,
    pub hist_steps: Vec<usize>,
}

impl Default for MlpSection {
    fn default() -> Self {
        MlpSection {
            batch_size: 64,
            epochs: 20,
            input_dim: 10,
            hidden: 32,
            n_train: 512,
            separation: 0.5,
            data_seed: 0,
            data_samples: 64,
            dump_dataset: false,
            hist_steps: vec![1, 2, 10, 100],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeSection {
    pub half_width: f64,
    pub resolution: usize,
    /// Parameter snapshot (`params.json` from an mlp run); fresh init when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<PathBuf>,
}

impl Default for LandscapeSection {
    fn default() -> Self {
        LandscapeSection {
            half_width: 1.0,
            resolution: 21,
            snapshot: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadraticSection {
    /// Diagonal curvature.
    pub a: Vec<f64>,
    pub x_star: Vec<f64>,
    /// Scan centre; the minimizer when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

impl Default for QuadraticSection {
    fn default() -> Self {
        QuadraticSection {
            a: vec![1.0, 2.0],
            x_star: vec![1.0, -0.5],
            x0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<V0Section>,
    #[serde(default)]
    pub warmup_steps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saddle: Option<SaddleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ngos: Option<NgosSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expdecay: Option<ExpdecaySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mlp: Option<MlpSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landscape: Option<LandscapeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic: Option<QuadraticSection>,
}

/// Which optional top-level entries an experiment reads.
struct Uses {
    optimizer: bool,
    steps: bool,
    warmup: bool,
    sections: &'static [&'static str],
}

fn uses(experiment: Experiment) -> Uses {
    match experiment {
        Experiment::Saddle => Uses {
            optimizer: true,
            steps: true,
            warmup: true,
            sections: &["saddle"],
        },
        Experiment::Ngos => Uses {
            optimizer: true,
            steps: true,
            warmup: true,
            sections: &["ngos"],
        },
        Experiment::ExpdecayImportance => Uses {
            optimizer: false,
            steps: false,
            warmup: false,
            sections: &["expdecay"],
        },
        Experiment::Mlp => Uses {
            optimizer: true,
            steps: false,
            warmup: true,
            sections: &["mlp"],
        },
        Experiment::Landscape => Uses {
            optimizer: false,
            steps: false,
            warmup: false,
            sections: &["landscape", "mlp"],
        },
        Experiment::Quadratic => Uses {
            optimizer: false,
            steps: false,
            warmup: false,
            sections: &["landscape", "quadratic"],
        },
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| HarnessError::config(format!("malformed JSON: {e}")))?;
        Self::from_value(value)
    }

    /// Accepts a bare config or a run manifest, whose `config` entry is used.
    pub fn from_value(value: Value) -> Result<Self> {
        let value = match value {
            Value::Object(mut map)
                if map.get("format").and_then(Value::as_str) == Some(MANIFEST_FORMAT) =>
            {
                map.remove("config")
                    .ok_or_else(|| HarnessError::config("manifest has no `config` entry"))?
            }
            other => other,
        };
        serde_json::from_value(value).map_err(|e| HarnessError::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            HarnessError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    fn present_sections(&self) -> Vec<&'static str> {
        let mut present = Vec::new();
        if self.saddle.is_some() {
            present.push("saddle");
        }
        if self.ngos.is_some() {
            present.push("ngos");
        }
        if self.expdecay.is_some() {
            present.push("expdecay");
        }
        if self.mlp.is_some() {
            present.push("mlp");
        }
        if self.landscape.is_some() {
            present.push("landscape");
        }
        if self.quadratic.is_some() {
            present.push("quadratic");
        }
        present
    }

    /// Checks that only relevant entries are set and fills in every default.
    ///
    /// Numeric validation of the sections happens when a run is planned.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let exp = self.experiment;
        let u = uses(exp);
        let unused = |what: &str| {
            HarnessError::config(format!(
                "`{what}` is not used by the {} experiment",
                exp.name()
            ))
        };
        for section in self.present_sections() {
            if !u.sections.contains(&section) {
                return Err(unused(section));
            }
        }
        if !u.optimizer {
            if self.optimizer.is_some() {
                return Err(unused("optimizer"));
            }
            if self.v0.is_some() {
                return Err(unused("v0"));
            }
        }
        if !u.steps && self.steps.is_some() {
            return Err(unused("steps"));
        }
        if !u.warmup && self.warmup_steps != 0 {
            return Err(unused("warmup_steps"));
        }

        let mut out = self.clone();
        if u.optimizer {
            let opt = self.optimizer.unwrap_or_default();
            opt.validate().map_err(HarnessError::from_validation)?;
            out.optimizer = Some(opt);
            out.v0 = Some(self.v0.unwrap_or_default().resolved()?);
        }
        if u.steps {
            let steps = self.steps.unwrap_or(match exp {
                Experiment::Saddle => DEFAULT_SADDLE_STEPS,
                _ => DEFAULT_NGOS_STEPS,
            });
            if steps == 0 {
                return Err(HarnessError::config("steps must be >= 1"));
            }
            out.steps = Some(steps);
        }
        out.output_dir = Some(
            self.output_dir
                .clone()
                .unwrap_or_else(|| DEFAULT_OUTPUT_DIR.into()),
        );
        match exp {
            Experiment::Saddle => out.saddle = Some(self.saddle.unwrap_or_default()),
            Experiment::Ngos => out.ngos = Some(self.ngos.clone().unwrap_or_default()),
            Experiment::ExpdecayImportance => {
                out.expdecay = Some(self.expdecay.unwrap_or_default())
            }
            Experiment::Mlp => out.mlp = Some(self.mlp.clone().unwrap_or_default()),
            Experiment::Landscape => {
                out.landscape = Some(self.landscape.clone().unwrap_or_default());
                out.mlp = Some(self.mlp.clone().unwrap_or_default());
            }
            Experiment::Quadratic => {
                out.landscape = Some(self.landscape.clone().unwrap_or_default());
                let mut q = self.quadratic.clone().unwrap_or_default();
                q.x0 = Some(q.x0.unwrap_or_else(|| q.x_star.clone()));
                out.quadratic = Some(q);
            }
        }
        Ok(out)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .unwrap_or_else(|| DEFAULT_OUTPUT_DIR.into())
    }

    pub(crate) fn optimizer_resolved(&self) -> OptimizerConfig {
        self.optimizer.expect("resolved config has an optimizer")
    }

    pub(crate) fn strategy_resolved(&self) -> Result<InitStrategy> {
        self.v0
            .expect("resolved config has a v0 section")
            .strategy()
    }

    pub(crate) fn steps_resolved(&self) -> u64 {
        self.steps.expect("resolved config has a step count")
    }
}
