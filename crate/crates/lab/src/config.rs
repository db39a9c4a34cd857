//! TOML experiment files.
//!
//! ```toml
//! [instance]
//! model = "bernoulli"          # bernoulli | gaussian | poisson | exponential | pareto
//! means = [0.3, 0.21, 0.2, 0.19, 0.18]
//! # sigma2 = 1.0               # gaussian variance (default 1)
//! # scale = 1.0                # pareto scale (default 1)
//!
//! [experiment]
//! policies = ["bcte", "tasd", "t3c:0.5", "rr"]
//! deltas = [0.1, 0.01]
//! n_runs = 1000
//! master_seed = 1
//! threshold = "heuristic"      # or "deviational" (c = K, alpha = 1.2) or "deviational:<c>:<alpha>"
//! horizon_cap = 1000000
//!
//! [output]
//! directory = "results"
//! formats = ["ndjson", "csv"]
//! ```
//!
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use bai_core::stopping::parse_threshold;
use bai_core::{Instance, ModelKind, PolicyKind};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::harness::{ExperimentConfig, DEFAULT_HORIZON_CAP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub instance: InstanceSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSection {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    pub means: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policies: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_runs: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_cap: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<String>>,
}

/// Output files to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub ndjson: bool,
    pub csv: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Self {
            ndjson: true,
            csv: true,
        }
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            LabError::Config(m) => LabError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LabError::Runtime(format!("config dump: {e}")))
    }

    pub fn model(&self) -> Result<ModelKind> {
        parse_model(
            &self.instance.model,
            self.instance.sigma2,
            self.instance.scale,
        )
    }

    pub fn instance(&self) -> Result<Instance> {
        Ok(Instance::new(self.model()?, self.instance.means.clone())?)
    }

    /// Fills unset fields with defaults and validates.
    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let inst = self.instance()?;
        let e = &self.experiment;
        let policies = match &e.policies {
            Some(ps) => ps
                .iter()
                .map(|p| {
                    p.parse::<PolicyKind>()
                        .map_err(|err| bad_field("policies", p, err))
                })
                .collect::<Result<Vec<_>>>()?,
            None => vec![PolicyKind::BestChallengerTe],
        };
        let threshold = match &e.threshold {
            Some(t) => parse_threshold(t, Some(inst.num_arms()))
                .map_err(|err| bad_field("threshold", t, err))?,
            None => bai_core::ThresholdKind::HeuristicLogLog,
        };
        let mut cfg = ExperimentConfig::new(inst, policies, e.deltas.clone().unwrap_or(vec![0.1]));
        cfg.n_runs = e.n_runs.unwrap_or(cfg.n_runs);
        cfg.master_seed = e.master_seed.unwrap_or(0);
        cfg.threshold = threshold;
        cfg.horizon_cap = e.horizon_cap.unwrap_or(DEFAULT_HORIZON_CAP);
        cfg.timing = e.timing.unwrap_or(false);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn formats(&self) -> Result<Formats> {
        let Some(list) = &self.output.formats else {
            return Ok(Formats::default());
        };
        let mut f = Formats {
            ndjson: false,
            csv: false,
        };
        for name in list {
            match name.as_str() {
                "ndjson" => f.ndjson = true,
                "csv" => f.csv = true,
                other => {
                    return Err(LabError::Config(format!(
                        "output.formats: unknown format `{other}`"
                    )))
                }
            }
        }
        Ok(f)
    }

    /// Fully explicit form of an experiment, suitable for re-reading.
    pub fn effective(cfg: &ExperimentConfig, output: &OutputSection) -> Self {
        let (model, sigma2, scale) = model_fields(cfg.instance.model());
        ConfigFile {
            instance: InstanceSection {
                model,
                sigma2,
                scale,
                means: cfg.instance.means().to_vec(),
            },
            experiment: ExperimentSection {
                policies: Some(cfg.policies.iter().map(ToString::to_string).collect()),
                deltas: Some(cfg.deltas.clone()),
                n_runs: Some(cfg.n_runs),
                master_seed: Some(cfg.master_seed),
                threshold: Some(cfg.threshold.to_string()),
                horizon_cap: Some(cfg.horizon_cap),
                timing: Some(cfg.timing),
            },
            output: output.clone(),
        }
    }
}

fn bad_field(field: &str, value: &str, err: bai_core::Error) -> LabError {
    LabError::Config(format!("experiment.{field}: `{value}`: {err}"))
}

/// Model from its name and optional parameters; `sigma2` and `scale`
/// default to one and are rejected for models that do not take them.
pub fn parse_model(name: &str, sigma2: Option<f64>, scale: Option<f64>) -> Result<ModelKind> {
    let lower = name.trim().to_ascii_lowercase();
    let model = match lower.as_str() {
        "gaussian" | "normal" => ModelKind::Gaussian {
            sigma2: sigma2.unwrap_or(1.0),
        },
        "pareto" => ModelKind::Pareto {
            scale: scale.unwrap_or(1.0),
        },
        "bernoulli" | "poisson" | "exponential" => {
            if sigma2.is_some() || scale.is_some() {
                return Err(LabError::Config(format!(
                    "model `{lower}` takes no sigma2 or scale"
                )));
            }
            match lower.as_str() {
                "bernoulli" => ModelKind::Bernoulli,
                "poisson" => ModelKind::Poisson,
                _ => ModelKind::Exponential,
            }
        }
        other => return Err(LabError::Config(format!("unknown model `{other}`"))),
    };
    if matches!(model, ModelKind::Gaussian { .. }) && scale.is_some() {
        return Err(LabError::Config("gaussian model takes no scale".into()));
    }
    if matches!(model, ModelKind::Pareto { .. }) && sigma2.is_some() {
        return Err(LabError::Config("pareto model takes no sigma2".into()));
    }
    model.validate()?;
    Ok(model)
}

fn model_fields(model: &ModelKind) -> (String, Option<f64>, Option<f64>) {
    match *model {
        ModelKind::Gaussian { sigma2 } => ("gaussian".into(), Some(sigma2), None),
        ModelKind::Pareto { scale } => ("pareto".into(), None, Some(scale)),
        other => (other.name().into(), None, None),
    }
}
