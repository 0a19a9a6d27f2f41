//! Run configuration. JSON with a top-level `"model"` discriminator; every
//! other field falls back to the defaults below.

use std::path::{Path, PathBuf};

use pvt_core::anfis::{ConsequentFit, DEFAULT_CLUSTERS};
use pvt_core::ann::mlp::{EarlyStopping, DEFAULT_HIDDEN};
use pvt_core::ann::rbf::DEFAULT_CENTERS;
use pvt_core::lssvm::{LssvmBounds, REFERENCE_GAMMA, REFERENCE_SIGMA2};
use pvt_core::numerics::{GaConfig, LmConfig, Optimizer, PsoConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_SPLIT: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_split")]
    pub split_fraction: f64,
    /// Input CSV; `--data` overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(flatten)]
    pub model: ModelConfig,
}

fn default_split() -> f64 {
    DEFAULT_SPLIT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelConfig {
    Lssvm(LssvmConfig),
    Anfis(AnfisConfig),
    MlpBp(MlpBpConfig),
    MlpLm(MlpLmConfig),
    RbfInterp(RbfInterpConfig),
    RbfCenters(RbfCentersConfig),
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Lssvm(_) => "lssvm",
            ModelConfig::Anfis(_) => "anfis",
            ModelConfig::MlpBp(_) => "mlp-bp",
            ModelConfig::MlpLm(_) => "mlp-lm",
            ModelConfig::RbfInterp(_) => "rbf-interp",
            ModelConfig::RbfCenters(_) => "rbf-centers",
        }
    }

    pub const NAMES: [&'static str; 6] = [
        "lssvm",
        "anfis",
        "mlp-bp",
        "mlp-lm",
        "rbf-interp",
        "rbf-centers",
    ];

    /// Defaults for a model name.
    pub fn default_for(name: &str) -> Option<ModelConfig> {
        Some(match name {
            "lssvm" => ModelConfig::Lssvm(LssvmConfig::default()),
            "anfis" => ModelConfig::Anfis(AnfisConfig::default()),
            "mlp-bp" => ModelConfig::MlpBp(MlpBpConfig::default()),
            "mlp-lm" => ModelConfig::MlpLm(MlpLmConfig::default()),
            "rbf-interp" => ModelConfig::RbfInterp(RbfInterpConfig::default()),
            "rbf-centers" => ModelConfig::RbfCenters(RbfCentersConfig::default()),
            _ => return None,
        })
    }

    /// Overrides the iteration budget of whichever optimizer the model uses.
    pub fn set_search_iterations(&mut self, iterations: usize) {
        match self {
            ModelConfig::Lssvm(c) => match &mut c.optimizer {
                Optimizer::Ga(g) => g.iterations = iterations,
                Optimizer::Pso(p) => p.iterations = iterations,
            },
            ModelConfig::Anfis(c) => c.pso.iterations = iterations,
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LssvmConfig {
    /// Search `(γ, σ²)`; when false the fixed values below are used.
    pub tune: bool,
    pub gamma: f64,
    pub sigma2: f64,
    pub optimizer: Optimizer,
    pub bounds: LssvmBounds,
}

impl Default for LssvmConfig {
    fn default() -> Self {
        LssvmConfig {
            tune: true,
            gamma: REFERENCE_GAMMA,
            sigma2: REFERENCE_SIGMA2,
            optimizer: Optimizer::Ga(GaConfig::default()),
            bounds: LssvmBounds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnfisConfig {
    pub clusters: usize,
    pub consequents: ConsequentFit,
    pub pso: PsoConfig,
}

impl Default for AnfisConfig {
    fn default() -> Self {
        AnfisConfig {
            clusters: DEFAULT_CLUSTERS,
            consequents: ConsequentFit::default(),
            pso: PsoConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpBpConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for MlpBpConfig {
    fn default() -> Self {
        MlpBpConfig {
            hidden: DEFAULT_HIDDEN,
            learning_rate: 0.5,
            epochs: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpLmConfig {
    pub hidden: usize,
    pub lm: LmConfig,
    /// Hold out part of the training partition and stop on its error;
    /// `null` runs Levenberg–Marquardt to convergence on all of it.
    pub early_stopping: Option<EarlyStopping>,
}

impl Default for MlpLmConfig {
    fn default() -> Self {
        MlpLmConfig {
            hidden: DEFAULT_HIDDEN,
            lm: LmConfig::default(),
            early_stopping: Some(EarlyStopping::default()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbfInterpConfig {
    /// Width; defaults to the mean nearest-neighbour distance of the
    /// training inputs.
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbfCentersConfig {
    pub centers: usize,
    /// Width; defaults to the mean nearest-neighbour distance of the centers.
    pub sigma: Option<f64>,
    /// Run Levenberg–Marquardt on the width after the initial fit, with
    /// `lm.max_iterations` as its budget.
    pub refine_sigma: bool,
    pub lm: LmConfig,
}

impl Default for RbfCentersConfig {
    fn default() -> Self {
        RbfCentersConfig {
            centers: DEFAULT_CENTERS,
            sigma: None,
            refine_sigma: true,
            lm: LmConfig {
                max_iterations: 50,
                ..LmConfig::default()
            },
        }
    }
}

impl RunConfig {
    pub fn new(model: ModelConfig) -> Self {
        RunConfig {
            seed: 0,
            split_fraction: DEFAULT_SPLIT,
            data: None,
            model,
        }
    }

    pub fn from_json(text: &str) -> CliResult<RunConfig> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| CliError::Usage(format!("config is not valid JSON: {e}")))?;
        match value.get("model").and_then(|m| m.as_str()) {
            Some(name) if ModelConfig::default_for(name).is_some() => {}
            Some(name) => {
                return Err(CliError::Usage(format!(
                    "unknown model {name:?}; expected one of {}",
                    ModelConfig::NAMES.join(", ")
                )))
            }
            None => {
                return Err(CliError::Usage(
                    "config needs a string \"model\" field".into(),
                ))
            }
        }
        let cfg: RunConfig = serde_json::from_value(value)
            .map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(CliError::Usage(format!(
                "split_fraction must lie in (0, 1), got {}",
                self.split_fraction
            )));
        }
        Ok(())
    }

    /// Pushes the master seed into every seeded component.
    pub fn resolved(mut self) -> RunConfig {
        let seed = self.seed;
        match &mut self.model {
            ModelConfig::Lssvm(c) => match &mut c.optimizer {
                Optimizer::Ga(g) => g.seed = seed,
                Optimizer::Pso(p) => p.seed = seed,
            },
            ModelConfig::Anfis(c) => c.pso.seed = seed,
            _ => {}
        }
        self
    }
}
