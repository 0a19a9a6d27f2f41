//! Split, normalize, train, evaluate: the body of the `train` command.

use std::path::Path;
use std::time::Instant;

use pvt_core::anfis::{self, count_parameters, AnfisModel, PARAMS_PER_MF};
use pvt_core::ann::mlp::{self, MlpModel};
use pvt_core::ann::rbf::{self, RbfModel};
use pvt_core::dataset::{split, Column, Dataset, Samples, Scaler, INPUT_COUNT};
use pvt_core::evaluation::{metrics, MetricsReport, Partition};
use pvt_core::lssvm::{self, LssvmHyper, LssvmModel};
use pvt_core::numerics::{LmResult, LmStatus, RNG_ALGORITHM};
use serde::{Deserialize, Serialize};

use crate::config::{ModelConfig, RunConfig};
use crate::error::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Variable count behind the published ANFIS parameter total of 84.
pub const PUBLISHED_ANFIS_VARIABLES: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum TrainedModel {
    Lssvm(LssvmModel),
    Anfis(AnfisModel),
    Mlp(MlpModel),
    Rbf(RbfModel),
}

impl TrainedModel {
    /// Predictions in normalized target units.
    pub fn predict_normalized(&self, inputs: &[Vec<f64>]) -> pvt_core::Result<Vec<f64>> {
        match self {
            TrainedModel::Lssvm(m) => m.predict_many(inputs),
            TrainedModel::Anfis(m) => m.predict_many(inputs),
            TrainedModel::Mlp(m) => m.predict_many(inputs),
            TrainedModel::Rbf(m) => m.predict_many(inputs),
        }
    }
}

/// What `model.json` holds: the trained model plus the scaler fitted on its
/// training partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(flatten)]
    pub model: TrainedModel,
    pub scaler: Scaler,
}

impl ModelFile {
    pub fn load(path: &Path) -> CliResult<ModelFile> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> CliResult<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Normalized input rows of `data` under this model's scaler.
    pub fn normalized_inputs(&self, data: &Dataset) -> CliResult<Vec<Vec<f64>>> {
        data.records
            .iter()
            .map(|r| Ok(self.scaler.normalize_inputs(&r.inputs())?))
            .collect()
    }

    /// Predictions in target units for every record of `data`.
    pub fn predict(&self, data: &Dataset) -> CliResult<Vec<f64>> {
        let inputs = self.normalized_inputs(data)?;
        let norm = self.model.predict_normalized(&inputs)?;
        norm.iter()
            .map(|&v| Ok(self.scaler.denormalize(v, Column::TARGET)?))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionMetrics {
    pub train: MetricsReport,
    pub test: MetricsReport,
    pub total: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnfisParameterCounts {
    pub clusters: usize,
    pub input_variables: usize,
    pub memberships_per_variable: usize,
    /// Premise parameters actually tuned.
    pub implemented: usize,
    /// The same formula with six variables, as in the published total.
    pub published_formula: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmSummary {
    pub status: LmStatus,
    pub iterations: usize,
    pub accepted_steps: usize,
    pub sse: f64,
}

impl From<&LmResult> for LmSummary {
    fn from(r: &LmResult) -> Self {
        LmSummary {
            status: r.status,
            iterations: r.iterations,
            accepted_steps: r.accepted_steps,
            sse: r.cost,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    /// What `history.csv` records, e.g. validation MSE per GA generation.
    pub history_metric: String,
    pub history_len: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hyperparameters: Option<LssvmHyper>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation_mse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anfis_parameters: Option<AnfisParameterCounts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ridge_fallback: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rbf_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levenberg_marquardt: Option<LmSummary>,
}

/// Everything `train` writes except wall time, which lives in timing.json
/// so that reports stay byte-identical across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub rng_algorithm: String,
    pub config: RunConfig,
    pub records: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub metrics: PartitionMetrics,
    pub training: TrainingSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub index: usize,
    pub partition: Partition,
    pub measured: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone)]
pub struct TrainArtifacts {
    pub model: ModelFile,
    pub report: RunReport,
    pub history: Vec<f64>,
    pub predictions: Vec<PredictionRow>,
    pub wall_seconds: f64,
}

struct Fitted {
    model: TrainedModel,
    history: Vec<f64>,
    summary: TrainingSummary,
}

fn fit_model(cfg: &RunConfig, train: &Samples) -> CliResult<Fitted> {
    let seed = cfg.seed;
    let fitted = match &cfg.model {
        ModelConfig::Lssvm(c) => {
            if c.tune {
                let out = lssvm::tune_inner_split(train, &c.optimizer, &c.bounds, seed)?;
                Fitted {
                    history: out.search.history.clone(),
                    summary: TrainingSummary {
                        history_metric: format!(
                            "{} best validation MSE per iteration",
                            c.optimizer.name()
                        ),
                        hyperparameters: Some(out.hyper),
                        validation_mse: Some(out.validation_mse),
                        ..Default::default()
                    },
                    model: TrainedModel::Lssvm(out.model),
                }
            } else {
                let hyper = LssvmHyper::new(c.gamma, c.sigma2)?;
                Fitted {
                    model: TrainedModel::Lssvm(lssvm::train(train, hyper)?),
                    history: vec![],
                    summary: TrainingSummary {
                        history_metric: "none".into(),
                        hyperparameters: Some(hyper),
                        ..Default::default()
                    },
                }
            }
        }
        ModelConfig::Anfis(c) => {
            let out = anfis::train(train, c.clusters, &c.pso, c.consequents)?;
            let counts = AnfisParameterCounts {
                clusters: c.clusters,
                input_variables: INPUT_COUNT,
                memberships_per_variable: PARAMS_PER_MF,
                implemented: count_parameters(c.clusters, INPUT_COUNT, PARAMS_PER_MF),
                published_formula: count_parameters(
                    c.clusters,
                    PUBLISHED_ANFIS_VARIABLES,
                    PARAMS_PER_MF,
                ),
            };
            Fitted {
                model: TrainedModel::Anfis(out.model),
                history: out.history,
                summary: TrainingSummary {
                    history_metric: "pso best training RMSE per iteration".into(),
                    anfis_parameters: Some(counts),
                    ridge_fallback: Some(out.ridge_fallback),
                    ..Default::default()
                },
            }
        }
        ModelConfig::MlpBp(c) => {
            let out = mlp::train_bp(train, c.hidden, c.learning_rate, c.epochs, seed)?;
            Fitted {
                model: TrainedModel::Mlp(out.model),
                history: out.history,
                summary: TrainingSummary {
                    history_metric: "training MSE per epoch".into(),
                    ..Default::default()
                },
            }
        }
        ModelConfig::MlpLm(c) => {
            let out = match &c.early_stopping {
                Some(stop) => mlp::train_lm_early_stopping(train, c.hidden, &c.lm, stop, seed)?,
                None => mlp::train_lm(train, c.hidden, &c.lm, seed)?,
            };
            let metric = if c.early_stopping.is_some() {
                "training MSE per accepted step (fit share of the training partition)"
            } else {
                "training MSE per accepted step"
            };
            Fitted {
                model: TrainedModel::Mlp(out.model),
                history: out.history,
                summary: TrainingSummary {
                    history_metric: metric.into(),
                    validation_mse: out
                        .validation_history
                        .as_ref()
                        .map(|v| v.iter().copied().fold(f64::INFINITY, f64::min)),
                    levenberg_marquardt: out.lm.as_ref().map(LmSummary::from),
                    ..Default::default()
                },
            }
        }
        ModelConfig::RbfInterp(c) => {
            let sigma = match c.sigma {
                Some(s) => s,
                None => rbf::mean_nearest_center_distance(&train.inputs)
                    .filter(|d| *d > 0.0)
                    .unwrap_or(1.0),
            };
            let model = rbf::train_interpolation(train, sigma)?;
            Fitted {
                model: TrainedModel::Rbf(model),
                history: vec![],
                summary: TrainingSummary {
                    history_metric: "none".into(),
                    rbf_sigma: Some(sigma),
                    ..Default::default()
                },
            }
        }
        ModelConfig::RbfCenters(c) => {
            let mut out = rbf::train_centers(train, c.centers, c.sigma, seed)?;
            if c.refine_sigma {
                out = rbf::refine_sigma(&out.model, train, &c.lm)?;
            }
            let n = train.len() as f64;
            let history = out
                .refinement
                .as_ref()
                .map(|r| r.cost_history.iter().map(|c| c / n).collect())
                .unwrap_or_default();
            Fitted {
                summary: TrainingSummary {
                    history_metric: if c.refine_sigma {
                        "training MSE per accepted width step".into()
                    } else {
                        "none".into()
                    },
                    ridge_fallback: Some(out.ridge_fallback),
                    rbf_sigma: Some(out.model.sigma),
                    levenberg_marquardt: out.refinement.as_ref().map(LmSummary::from),
                    ..Default::default()
                },
                model: TrainedModel::Rbf(out.model),
                history,
            }
        }
    };
    Ok(fitted)
}

/// Runs the whole training protocol on `data`.
pub fn train(cfg: &RunConfig, data: &Dataset) -> CliResult<TrainArtifacts> {
    let started = Instant::now();
    let cfg = cfg.clone().resolved();
    cfg.validate()?;
    data.validate_raw()?;
    if !data.has_targets() {
        return Err(CliError::Usage(format!(
            "training data needs a {} column",
            Column::TARGET
        )));
    }
    let parts = split(data, cfg.split_fraction, cfg.seed)?;
    let scaler = Scaler::fit(&parts.train)?;
    let train_samples = scaler.apply(&parts.train)?.to_samples()?;

    let mut fitted = fit_model(&cfg, &train_samples)?;
    fitted.summary.history_len = fitted.history.len();
    let model = ModelFile {
        model: fitted.model,
        scaler,
    };

    let train_pred = model.predict(&parts.train)?;
    let test_pred = model.predict(&parts.test)?;
    let train_y = parts.train.targets()?;
    let test_y = parts.test.targets()?;
    let all_y: Vec<f64> = train_y.iter().chain(&test_y).copied().collect();
    let all_pred: Vec<f64> = train_pred.iter().chain(&test_pred).copied().collect();

    let report = RunReport {
        version: VERSION.to_string(),
        rng_algorithm: RNG_ALGORITHM.to_string(),
        records: data.len(),
        train_size: parts.train.len(),
        test_size: parts.test.len(),
        metrics: PartitionMetrics {
            train: metrics(&train_y, &train_pred, Partition::Train)?,
            test: metrics(&test_y, &test_pred, Partition::Test)?,
            total: metrics(&all_y, &all_pred, Partition::Total)?,
        },
        training: fitted.summary,
        config: cfg,
    };

    let mut predictions = Vec::with_capacity(data.len());
    for (indices, measured, predicted, partition) in [
        (
            &parts.train_indices,
            &train_y,
            &train_pred,
            Partition::Train,
        ),
        (&parts.test_indices, &test_y, &test_pred, Partition::Test),
    ] {
        for ((&index, &m), &p) in indices.iter().zip(measured).zip(predicted) {
            predictions.push(PredictionRow {
                index,
                partition,
                measured: m,
                predicted: p,
            });
        }
    }
    predictions.sort_by_key(|r| r.index);

    Ok(TrainArtifacts {
        model,
        report,
        history: fitted.history,
        predictions,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}
