//! First-order Takagi–Sugeno neuro-fuzzy inference (ANFIS).
//!
//! Each rule owns one Gaussian membership per input and an affine consequent
//! `m·x + r`. A forward pass runs five layers: memberships, product firing
//! strengths, normalization, weighted consequents and their sum.
//!
//! Training is hybrid. Particle swarm moves the membership centers and widths
//! to minimize training RMSE; for each candidate premise the consequents are
//! refitted by least squares, either one weighted regression per rule
//! ([`ConsequentFit::Local`]) or a single regression on the
//! strength-weighted regressors of all rules ([`ConsequentFit::Global`]).

use serde::{Deserialize, Serialize};

use crate::dataset::Samples;
use crate::error::{check_dim, Error, Result};
use crate::numerics::linalg::{least_squares_or_ridge, DenseMatrix};
use crate::numerics::{farthest_point_centers, pso_minimize_seeded, PsoConfig};

/// Membership widths never shrink below this (normalized units).
pub const MIN_SIGMA: f64 = 1e-3;
/// Ridge strength used when the consequent system loses rank.
pub const RIDGE_LAMBDA: f64 = 1e-8;
pub const DEFAULT_CLUSTERS: usize = 7;
/// Center and width per membership function.
pub const PARAMS_PER_MF: usize = 2;
/// PSO keeps each center within this fraction of the input span of its
/// clustering seed.
pub const CENTER_RADIUS: f64 = 0.25;
/// PSO keeps each width within this factor of its initial value.
pub const SIGMA_FACTOR: f64 = 2.0;

/// How rule consequents are estimated for a fixed premise.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsequentFit {
    /// Rule `i` minimizes `Σ_p w̄_ip (y_p − m_i·x_p − r_i)²` on its own.
    #[default]
    Local,
    /// All consequents jointly minimize the training error of the combined
    /// output. Tightest fit, but prone to wild slopes on rules that fire
    /// on few training points.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMf {
    pub center: f64,
    pub sigma: f64,
}

impl GaussianMf {
    pub fn value(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.sigma;
        (-0.5 * z * z).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnfisRule {
    pub centers: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub slopes: Vec<f64>,
    pub intercept: f64,
}

impl AnfisRule {
    pub fn memberships(&self) -> impl Iterator<Item = GaussianMf> + '_ {
        self.centers
            .iter()
            .zip(&self.sigmas)
            .map(|(&center, &sigma)| GaussianMf { center, sigma })
    }

    /// Consequent `m·x + r`.
    pub fn consequent(&self, x: &[f64]) -> f64 {
        self.slopes.iter().zip(x).map(|(m, v)| m * v).sum::<f64>() + self.intercept
    }

    fn firing(&self, x: &[f64]) -> f64 {
        self.memberships()
            .zip(x)
            .map(|(mf, &v)| mf.value(v))
            .product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnfisModel {
    pub rules: Vec<AnfisRule>,
    pub input_dim: usize,
}

impl AnfisModel {
    pub fn new(rules: Vec<AnfisRule>, input_dim: usize) -> Result<Self> {
        let m = AnfisModel { rules, input_dim };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rules.is_empty() {
            return Err(Error::invalid("ANFIS needs at least one rule"));
        }
        for rule in &self.rules {
            check_dim(self.input_dim, rule.centers.len())?;
            check_dim(self.input_dim, rule.sigmas.len())?;
            check_dim(self.input_dim, rule.slopes.len())?;
            if rule.sigmas.iter().any(|s| !(*s > 0.0)) {
                return Err(Error::invalid("membership widths must be positive"));
            }
        }
        Ok(())
    }

    /// Layer II: `w_i = Π_j μ_ij(x_j)`.
    pub fn firing_strengths(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim, x.len())?;
        Ok(self.rules.iter().map(|r| r.firing(x)).collect())
    }

    /// Layers I–V.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        let w = self.firing_strengths(x)?;
        let consequents: Vec<f64> = self.rules.iter().map(|r| r.consequent(x)).collect();
        combine(&w, &consequents)
    }

    pub fn predict_many(&self, inputs: &[Vec<f64>]) -> Result<Vec<f64>> {
        inputs.iter().map(|x| self.forward(x)).collect()
    }

    pub fn parameter_count(&self) -> usize {
        count_parameters(self.rules.len(), self.input_dim, PARAMS_PER_MF)
    }
}

/// Layer III: `w̄_i = w_i / Σ_j w_j`.
pub fn normalize_strengths(w: &[f64]) -> Result<Vec<f64>> {
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid(
            "firing strengths must be finite and non-negative",
        ));
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateStrengths);
    }
    Ok(w.iter().map(|v| v / total).collect())
}

/// Layers III–V from raw strengths and per-rule consequent values.
pub fn combine(w: &[f64], consequents: &[f64]) -> Result<f64> {
    check_dim(w.len(), consequents.len())?;
    let wn = normalize_strengths(w)?;
    Ok(wn.iter().zip(consequents).map(|(a, f)| a * f).sum())
}

/// Total premise parameters: clusters × variables × parameters per MF.
pub fn count_parameters(n_c: usize, n_v: usize, n_mf: usize) -> usize {
    n_c * n_v * n_mf
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnfisTrainOutcome {
    pub model: AnfisModel,
    /// Best training RMSE after each PSO iteration.
    pub history: Vec<f64>,
    pub training_rmse: f64,
    /// True when the final consequent fit needed the ridge fallback.
    pub ridge_fallback: bool,
}

struct PremiseLayout {
    rules: usize,
    dim: usize,
}

impl PremiseLayout {
    fn len(&self) -> usize {
        self.rules * self.dim * PARAMS_PER_MF
    }

    fn encode(&self, centers: &[Vec<f64>], sigmas: &[Vec<f64>]) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.len());
        for (c, s) in centers.iter().zip(sigmas) {
            p.extend_from_slice(c);
            p.extend_from_slice(s);
        }
        p
    }

    /// Rules with the given premise and zeroed consequents.
    fn decode(&self, p: &[f64]) -> Vec<AnfisRule> {
        p.chunks(self.dim * PARAMS_PER_MF)
            .map(|chunk| AnfisRule {
                centers: chunk[..self.dim].to_vec(),
                sigmas: chunk[self.dim..].iter().map(|s| s.max(MIN_SIGMA)).collect(),
                slopes: vec![0.0; self.dim],
                intercept: 0.0,
            })
            .collect()
    }
}

fn normalized_strengths(rules: &[AnfisRule], samples: &Samples) -> Result<Vec<Vec<f64>>> {
    samples
        .inputs
        .iter()
        .map(|x| normalize_strengths(&rules.iter().map(|r| r.firing(x)).collect::<Vec<_>>()))
        .collect()
}

fn fit_global(rules: &mut [AnfisRule], samples: &Samples, strengths: &[Vec<f64>]) -> Result<bool> {
    let dim = samples.dim();
    let width = dim + 1;
    let mut design = DenseMatrix::zeros(samples.len(), rules.len() * width);
    for (row, (x, wn)) in samples.inputs.iter().zip(strengths).enumerate() {
        for (i, &wi) in wn.iter().enumerate() {
            for (j, &xj) in x.iter().enumerate() {
                design[(row, i * width + j)] = wi * xj;
            }
            design[(row, i * width + dim)] = wi;
        }
    }
    let (coef, ridge) = least_squares_or_ridge(&design, &samples.targets, RIDGE_LAMBDA)?;
    for (i, rule) in rules.iter_mut().enumerate() {
        rule.slopes
            .copy_from_slice(&coef[i * width..i * width + dim]);
        rule.intercept = coef[i * width + dim];
    }
    Ok(ridge)
}

fn fit_local(rules: &mut [AnfisRule], samples: &Samples, strengths: &[Vec<f64>]) -> Result<bool> {
    let dim = samples.dim();
    let mut any_ridge = false;
    for (i, rule) in rules.iter_mut().enumerate() {
        let mut design = DenseMatrix::zeros(samples.len(), dim + 1);
        let mut rhs = Vec::with_capacity(samples.len());
        for (row, ((x, wn), t)) in samples
            .inputs
            .iter()
            .zip(strengths)
            .zip(&samples.targets)
            .enumerate()
        {
            let root = wn[i].sqrt();
            for (j, &xj) in x.iter().enumerate() {
                design[(row, j)] = root * xj;
            }
            design[(row, dim)] = root;
            rhs.push(root * t);
        }
        let (coef, ridge) = least_squares_or_ridge(&design, &rhs, RIDGE_LAMBDA)?;
        rule.slopes.copy_from_slice(&coef[..dim]);
        rule.intercept = coef[dim];
        any_ridge |= ridge;
    }
    Ok(any_ridge)
}

/// Fits the consequents for fixed premises. Returns training RMSE and whether
/// the ridge fallback was needed.
fn fit_consequents(
    rules: &mut [AnfisRule],
    samples: &Samples,
    method: ConsequentFit,
) -> Result<(f64, bool)> {
    let strengths = normalized_strengths(rules, samples)?;
    let ridge = match method {
        ConsequentFit::Local => fit_local(rules, samples, &strengths)?,
        ConsequentFit::Global => fit_global(rules, samples, &strengths)?,
    };
    let mut sse = 0.0;
    for ((x, wn), t) in samples.inputs.iter().zip(&strengths).zip(&samples.targets) {
        let consequents: Vec<f64> = rules.iter().map(|r| r.consequent(x)).collect();
        let f = combine(wn, &consequents)?;
        sse += (f - t) * (f - t);
    }
    Ok(((sse / samples.len() as f64).sqrt(), ridge))
}

/// Hybrid PSO / least-squares training. The premise starts from
/// farthest-point cluster centers with widths of half the mean inter-center
/// distance per input. PSO then searches a box around that start: each
/// center within [`CENTER_RADIUS`] of the input span, each width within a
/// factor [`SIGMA_FACTOR`] (never below [`MIN_SIGMA`]). `pso.bounds` is
/// ignored.
pub fn train(
    samples: &Samples,
    n_clusters: usize,
    pso: &PsoConfig,
    consequents: ConsequentFit,
) -> Result<AnfisTrainOutcome> {
    if n_clusters == 0 {
        return Err(Error::invalid("ANFIS needs at least one cluster"));
    }
    if samples.is_empty() {
        return Err(Error::invalid("ANFIS training set is empty"));
    }
    let dim = samples.dim();
    let layout = PremiseLayout {
        rules: n_clusters,
        dim,
    };

    let spans: Vec<(f64, f64)> = (0..dim)
        .map(|j| {
            samples
                .inputs
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x[j]), hi.max(x[j]))
                })
        })
        .collect();

    let centers = farthest_point_centers(&samples.inputs, n_clusters, pso.seed)?;
    let sigma_init: Vec<f64> = (0..dim)
        .map(|j| {
            let mut total = 0.0;
            let mut pairs = 0usize;
            for a in 0..centers.len() {
                for b in (a + 1)..centers.len() {
                    total += (centers[a][j] - centers[b][j]).abs();
                    pairs += 1;
                }
            }
            let s = if pairs > 0 {
                0.5 * total / pairs as f64
            } else {
                0.5 * (spans[j].1 - spans[j].0)
            };
            s.max(MIN_SIGMA)
        })
        .collect();
    let init = layout.encode(&centers, &vec![sigma_init.clone(); n_clusters]);

    let mut bounds = Vec::with_capacity(layout.len());
    for c in &centers {
        for (j, &(lo, hi)) in spans.iter().enumerate() {
            let radius = CENTER_RADIUS * (hi - lo).max(MIN_SIGMA);
            bounds.push((c[j] - radius, c[j] + radius));
        }
        for s in &sigma_init {
            bounds.push((
                (s / SIGMA_FACTOR).max(MIN_SIGMA),
                (s * SIGMA_FACTOR).max(2.0 * MIN_SIGMA),
            ));
        }
    }
    let cfg = PsoConfig {
        bounds,
        ..pso.clone()
    };

    let objective = |p: &[f64]| {
        let mut rules = layout.decode(p);
        match fit_consequents(&mut rules, samples, consequents) {
            Ok((rmse, _)) => rmse,
            Err(_) => f64::INFINITY,
        }
    };
    let search = pso_minimize_seeded(objective, &cfg, &[init])?;

    let mut rules = layout.decode(&search.best_point);
    let (training_rmse, ridge_fallback) = fit_consequents(&mut rules, samples, consequents)?;
    Ok(AnfisTrainOutcome {
        model: AnfisModel::new(rules, dim)?,
        history: search.history,
        training_rmse,
        ridge_fallback,
    })
}
