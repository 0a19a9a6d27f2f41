//! Single-hidden-layer perceptron: sigmoid hidden units, linear output.
//!
//! `Z = Σ_i w3_i · sigmoid(Σ_j w_ij x_j + b1_i) + b3`

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::split_indices;
use crate::dataset::Samples;
use crate::error::{check_dim, Error, Result};
use crate::numerics::linalg::DenseMatrix;
use crate::numerics::rng::{tags, RandomStream};
use crate::numerics::{lm_fit_monitored, LmConfig, LmResult};

pub const DEFAULT_HIDDEN: usize = 7;
/// Cost above which gradient descent is declared divergent.
pub const DIVERGENCE_COST: f64 = 1e12;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Weights laid out like a published weight table: one row per hidden unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub hidden_weights: Vec<Vec<f64>>,
    pub hidden_biases: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
}

impl MlpModel {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        MlpModel {
            hidden_weights: vec![vec![0.0; input_dim]; hidden],
            hidden_biases: vec![0.0; hidden],
            output_weights: vec![0.0; hidden],
            output_bias: 0.0,
        }
    }

    /// Every weight and bias drawn from uniform(−0.5, 0.5).
    pub fn random(input_dim: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = RandomStream::derive(seed, &[tags::MLP_INIT]).into_rng();
        let mut m = Self::zeros(input_dim, hidden);
        let params: Vec<f64> = (0..m.param_count())
            .map(|_| rng.random_range(-0.5..0.5))
            .collect();
        m.set_params(&params).expect("parameter count matches");
        m
    }

    pub fn hidden(&self) -> usize {
        self.hidden_biases.len()
    }

    pub fn input_dim(&self) -> usize {
        self.hidden_weights.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hidden();
        if h == 0 {
            return Err(Error::invalid("MLP needs at least one hidden unit"));
        }
        check_dim(h, self.hidden_weights.len())?;
        check_dim(h, self.output_weights.len())?;
        let d = self.input_dim();
        for row in &self.hidden_weights {
            check_dim(d, row.len())?;
        }
        if !self.params().iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("MLP weights".into()));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.hidden() * (self.input_dim() + 2) + 1
    }

    /// Flat layout: hidden weights row by row, hidden biases, output
    /// weights, output bias.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        for row in &self.hidden_weights {
            p.extend_from_slice(row);
        }
        p.extend_from_slice(&self.hidden_biases);
        p.extend_from_slice(&self.output_weights);
        p.push(self.output_bias);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        check_dim(self.param_count(), p.len())?;
        let (h, d) = (self.hidden(), self.input_dim());
        let mut it = p.iter().copied();
        for row in &mut self.hidden_weights {
            for w in row.iter_mut() {
                *w = it.next().unwrap();
            }
        }
        for b in &mut self.hidden_biases {
            *b = it.next().unwrap();
        }
        for w in &mut self.output_weights {
            *w = it.next().unwrap();
        }
        self.output_bias = it.next().unwrap();
        debug_assert_eq!(h * (d + 2) + 1, p.len());
        Ok(())
    }

    fn with_params(&self, p: &[f64]) -> Self {
        let mut m = self.clone();
        m.set_params(p).expect("parameter count matches");
        m
    }

    fn activations(&self, x: &[f64]) -> Vec<f64> {
        self.hidden_weights
            .iter()
            .zip(&self.hidden_biases)
            .map(|(w, b)| sigmoid(w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b))
            .collect()
    }

    fn output(&self, hidden: &[f64]) -> f64 {
        self.output_weights
            .iter()
            .zip(hidden)
            .map(|(w, h)| w * h)
            .sum::<f64>()
            + self.output_bias
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.input_dim(), x.len())?;
        Ok(self.output(&self.activations(x)))
    }

    pub fn predict_many(&self, inputs: &[Vec<f64>]) -> Result<Vec<f64>> {
        inputs.iter().map(|x| self.forward(x)).collect()
    }

    /// Output and `∂Z/∂θ` in the flat parameter layout.
    fn output_sensitivity(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (h, d) = (self.hidden(), self.input_dim());
        let act = self.activations(x);
        let z = self.output(&act);
        let mut grad = vec![0.0; self.param_count()];
        for i in 0..h {
            let delta = self.output_weights[i] * act[i] * (1.0 - act[i]);
            for j in 0..d {
                grad[i * d + j] = delta * x[j];
            }
            grad[h * d + i] = delta;
            grad[h * d + h + i] = act[i];
        }
        grad[h * (d + 2)] = 1.0;
        (z, grad)
    }

    /// Sum of squared errors over `samples`.
    pub fn sse(&self, samples: &Samples) -> Result<f64> {
        let pred = self.predict_many(&samples.inputs)?;
        Ok(pred
            .iter()
            .zip(&samples.targets)
            .map(|(p, t)| (t - p) * (t - p))
            .sum())
    }

    /// Gradient of `E = Σ_p (t_p − Z_p)²` with respect to every parameter.
    pub fn gradient(&self, samples: &Samples) -> Result<Vec<f64>> {
        if samples.is_empty() {
            return Err(Error::invalid("gradient needs a non-empty batch"));
        }
        check_dim(self.input_dim(), samples.dim())?;
        let mut total = vec![0.0; self.param_count()];
        for (x, &t) in samples.inputs.iter().zip(&samples.targets) {
            let (z, dz) = self.output_sensitivity(x);
            let scale = -2.0 * (t - z);
            for (g, d) in total.iter_mut().zip(&dz) {
                *g += scale * d;
            }
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpTrainOutcome {
    pub model: MlpModel,
    /// Training MSE, one entry per epoch (gradient descent) or per accepted
    /// step (Levenberg–Marquardt, starting at the initial weights).
    pub history: Vec<f64>,
    pub lm: Option<LmResult>,
    /// Validation MSE per accepted step when early stopping was used.
    pub validation_history: Option<Vec<f64>>,
}

/// Full-batch gradient descent from a given model. Each epoch steps against
/// the mean per-sample gradient, `θ ← θ − λ ∇E / N`.
pub fn train_bp_from(
    model: MlpModel,
    samples: &Samples,
    learning_rate: f64,
    epochs: usize,
) -> Result<MlpTrainOutcome> {
    if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
        return Err(Error::invalid("learning rate must be non-negative"));
    }
    model.validate()?;
    let n = samples.len() as f64;
    let mut params = model.params();
    let mut model = model;
    let mut history = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let grad = model.gradient(samples)?;
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= learning_rate * g / n;
        }
        model.set_params(&params)?;
        let cost = model.sse(samples)?;
        if !(cost <= DIVERGENCE_COST) {
            return Err(Error::Diverged { epoch, cost });
        }
        history.push(cost / n);
    }
    Ok(MlpTrainOutcome {
        model,
        history,
        lm: None,
        validation_history: None,
    })
}

/// Gradient descent from seeded uniform(−0.5, 0.5) weights.
pub fn train_bp(
    samples: &Samples,
    hidden: usize,
    learning_rate: f64,
    epochs: usize,
    seed: u64,
) -> Result<MlpTrainOutcome> {
    if learning_rate <= 0.0 {
        return Err(Error::invalid("learning rate must be positive"));
    }
    let init = MlpModel::random(samples.dim(), hidden, seed);
    train_bp_from(init, samples, learning_rate, epochs)
}

/// Which parameters Levenberg–Marquardt may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmScope {
    All,
    /// Hidden layer frozen; the fit is then linear in the free parameters.
    OutputLayer,
}

/// Levenberg–Marquardt on the per-sample residuals `t_p − Z_p`.
pub fn fit_lm(
    model: MlpModel,
    samples: &Samples,
    cfg: &LmConfig,
    scope: LmScope,
) -> Result<MlpTrainOutcome> {
    fit_lm_monitored(model, samples, cfg, scope, |_| false)
}

fn fit_lm_monitored<M>(
    model: MlpModel,
    samples: &Samples,
    cfg: &LmConfig,
    scope: LmScope,
    mut monitor: M,
) -> Result<MlpTrainOutcome>
where
    M: FnMut(&MlpModel) -> bool,
{
    model.validate()?;
    if samples.is_empty() {
        return Err(Error::invalid("LM training set is empty"));
    }
    check_dim(model.input_dim(), samples.dim())?;
    let all = model.params();
    let free: Vec<usize> = match scope {
        LmScope::All => (0..all.len()).collect(),
        LmScope::OutputLayer => {
            let h = model.hidden();
            let start = h * (model.input_dim() + 1);
            (start..all.len()).collect()
        }
    };
    let assemble = |p: &[f64]| {
        let mut full = all.clone();
        for (&i, &v) in free.iter().zip(p) {
            full[i] = v;
        }
        model.with_params(&full)
    };
    let residuals = |p: &[f64]| {
        let m = assemble(p);
        samples
            .inputs
            .iter()
            .zip(&samples.targets)
            .map(|(x, t)| t - m.output(&m.activations(x)))
            .collect::<Vec<f64>>()
    };
    let jacobian = |p: &[f64]| {
        let m = assemble(p);
        let mut jac = DenseMatrix::zeros(samples.len(), free.len());
        for (row, x) in samples.inputs.iter().enumerate() {
            let (_, dz) = m.output_sensitivity(x);
            for (col, &i) in free.iter().enumerate() {
                jac[(row, col)] = -dz[i];
            }
        }
        jac
    };
    let init: Vec<f64> = free.iter().map(|&i| all[i]).collect();
    let result = lm_fit_monitored(residuals, jacobian, &init, cfg, |p| monitor(&assemble(p)))?;
    let n = samples.len() as f64;
    Ok(MlpTrainOutcome {
        model: assemble(&result.params),
        history: result.cost_history.iter().map(|c| c / n).collect(),
        lm: Some(result),
        validation_history: None,
    })
}

/// Hold-out rule for stopping Levenberg–Marquardt before it fits noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EarlyStopping {
    /// Share of the training set held out for validation.
    pub validation_fraction: f64,
    /// Accepted steps without a new validation minimum before stopping.
    pub patience: usize,
}

impl Default for EarlyStopping {
    fn default() -> Self {
        EarlyStopping {
            validation_fraction: 0.2,
            patience: 6,
        }
    }
}

/// Levenberg–Marquardt on a seeded share of `samples`, stopped once the
/// held-out MSE has not improved for `patience` accepted steps. Returns the
/// weights with the lowest held-out MSE.
pub fn train_lm_early_stopping(
    samples: &Samples,
    hidden: usize,
    cfg: &LmConfig,
    stopping: &EarlyStopping,
    seed: u64,
) -> Result<MlpTrainOutcome> {
    if stopping.patience == 0 {
        return Err(Error::invalid("early-stopping patience must be at least 1"));
    }
    let (fit_idx, val_idx) = split_indices(
        samples.len(),
        1.0 - stopping.validation_fraction,
        seed ^ tags::INNER_SPLIT,
    )?;
    let fit = samples.subset(&fit_idx);
    let val = samples.subset(&val_idx);
    let init = MlpModel::random(samples.dim(), hidden, seed);

    let val_mse = |m: &MlpModel| {
        m.sse(&val)
            .map(|c| c / val.len() as f64)
            .unwrap_or(f64::INFINITY)
    };
    let mut best = (val_mse(&init), init.clone());
    let mut val_history = vec![best.0];
    let mut since_best = 0;
    let mut out = fit_lm_monitored(init, &fit, cfg, LmScope::All, |m| {
        let v = val_mse(m);
        val_history.push(v);
        if v < best.0 {
            best = (v, m.clone());
            since_best = 0;
        } else {
            since_best += 1;
        }
        since_best >= stopping.patience
    })?;
    // the last accepted point is never shown to the monitor when the fit
    // ends by convergence or budget
    let last = val_mse(&out.model);
    if out.history.len() > val_history.len() {
        val_history.push(last);
    }
    if last < best.0 {
        best = (last, out.model.clone());
    }
    out.model = best.1;
    out.validation_history = Some(val_history);
    Ok(out)
}

/// Levenberg–Marquardt from seeded uniform(−0.5, 0.5) weights.
pub fn train_lm(
    samples: &Samples,
    hidden: usize,
    cfg: &LmConfig,
    seed: u64,
) -> Result<MlpTrainOutcome> {
    let init = MlpModel::random(samples.dim(), hidden, seed);
    fit_lm(init, samples, cfg, LmScope::All)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::least_squares;

    fn grid(n: usize, f: impl Fn(f64) -> f64) -> Samples {
        let inputs: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![-1.0 + 2.0 * i as f64 / (n - 1) as f64])
            .collect();
        let targets = inputs.iter().map(|x| f(x[0])).collect();
        Samples::new(inputs, targets).unwrap()
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
        for z in [-40.0, -3.2, -0.1, 0.7, 5.0, 700.0] {
            assert!((sigmoid(-z) - (1.0 - sigmoid(z))).abs() < 1e-15);
        }
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn constant_networks() {
        let mut m = MlpModel::zeros(5, 7);
        m.output_weights = vec![1.0; 7];
        m.output_bias = 0.25;
        assert_eq!(m.forward(&[0.3; 5]).unwrap(), 7.0 * 0.5 + 0.25);
        m.output_weights = vec![0.0; 7];
        assert_eq!(m.forward(&[-0.8; 5]).unwrap(), 0.25);
        assert!(m.forward(&[0.0; 4]).is_err());
    }

    #[test]
    fn one_unit_by_hand() {
        let m = MlpModel {
            hidden_weights: vec![vec![1.0]],
            hidden_biases: vec![0.0],
            output_weights: vec![2.0],
            output_bias: 0.0,
        };
        assert_eq!(m.forward(&[0.0]).unwrap(), 1.0);
        assert_eq!(m.forward(&[0.4]).unwrap(), m.forward(&[0.4]).unwrap());
    }

    #[test]
    fn perfect_fit_has_zero_gradient() {
        let m = MlpModel::random(2, 3, 1);
        let inputs = vec![vec![0.1, 0.2], vec![-0.5, 0.3]];
        let targets = m.predict_many(&inputs).unwrap();
        let g = m.gradient(&Samples::new(inputs, targets).unwrap()).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn gradient_is_additive_over_samples() {
        let m = MlpModel::random(3, 4, 2);
        let s = Samples::new(
            vec![
                vec![0.1, 0.2, 0.3],
                vec![-0.4, 0.9, 0.0],
                vec![0.7, -0.7, 0.2],
            ],
            vec![1.0, -0.5, 0.25],
        )
        .unwrap();
        let total = m.gradient(&s).unwrap();
        let mut summed = vec![0.0; total.len()];
        for i in 0..s.len() {
            for (a, b) in summed.iter_mut().zip(m.gradient(&s.subset(&[i])).unwrap()) {
                *a += b;
            }
        }
        for (a, b) in total.iter().zip(&summed) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        use crate::numerics::finite_diff_gradient;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let mut worst: f64 = 0.0;
        for trial in 0..50 {
            let m = MlpModel::random(5, 7, trial);
            let n = rng.random_range(1..8);
            let inputs: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let targets = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = Samples::new(inputs, targets).unwrap();
            let analytic = m.gradient(&s).unwrap();
            let numeric =
                finite_diff_gradient(|p| m.with_params(p).sse(&s).unwrap(), &m.params(), 1e-6)
                    .unwrap();
            let scale = analytic.iter().map(|g| g.abs()).fold(1e-3, f64::max);
            for (a, b) in analytic.iter().zip(&numeric) {
                worst = worst.max((a - b).abs() / scale);
            }
        }
        assert!(worst < 1e-5, "max relative error {worst}");
    }

    #[test]
    fn zero_rate_leaves_weights() {
        let s = grid(10, |x| x);
        let init = MlpModel::random(1, 7, 5);
        let out = train_bp_from(init.clone(), &s, 0.0, 50).unwrap();
        assert_eq!(out.model, init);
    }

    #[test]
    fn bp_learns_identity() {
        let s = grid(20, |x| x);
        let out = train_bp(&s, 7, 0.05, 5000, 11).unwrap();
        let mse = out.history.last().copied().unwrap();
        assert!(mse < 1e-3, "final MSE {mse}");
        let again = train_bp(&s, 7, 0.05, 5000, 11).unwrap();
        assert_eq!(out.model, again.model);
    }

    #[test]
    fn bp_divergence_detected() {
        let s = grid(10, |x| 1e4 * x);
        let res = train_bp(&s, 7, 50.0, 200, 1);
        assert!(matches!(res, Err(Error::Diverged { .. })), "{res:?}");
    }

    #[test]
    fn lm_output_layer_matches_least_squares() {
        let s = grid(25, |x| (2.0 * x).cos() + 0.3 * x);
        // hidden units spread far enough apart to keep the design well conditioned
        let mut init = MlpModel::random(1, 5, 8);
        init.hidden_weights = vec![vec![-4.0], vec![-2.0], vec![1.5], vec![3.0], vec![5.0]];
        init.hidden_biases = vec![1.0, -0.5, 0.3, -1.0, 2.0];
        let out = fit_lm(init.clone(), &s, &LmConfig::default(), LmScope::OutputLayer).unwrap();

        // oracle: hidden activations plus a constant column
        let rows: Vec<Vec<f64>> = s
            .inputs
            .iter()
            .map(|x| {
                let mut r = init.activations(x);
                r.push(1.0);
                r
            })
            .collect();
        let coef = least_squares(&DenseMatrix::from_rows(&rows).unwrap(), &s.targets).unwrap();
        for (a, b) in out.model.output_weights.iter().zip(&coef) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        assert!((out.model.output_bias - coef[5]).abs() < 1e-6);
        assert_eq!(out.model.hidden_weights, init.hidden_weights);
    }

    #[test]
    fn lm_at_perfect_fit_returns_init() {
        let init = MlpModel::random(2, 3, 4);
        let inputs = vec![vec![0.1, 0.2], vec![-0.5, 0.3], vec![0.9, -0.9]];
        let targets = init.predict_many(&inputs).unwrap();
        let s = Samples::new(inputs, targets).unwrap();
        let out = fit_lm(init.clone(), &s, &LmConfig::default(), LmScope::All).unwrap();
        assert_eq!(out.model, init);
    }

    #[test]
    fn lm_fits_sine() {
        let s = grid(30, |x| (std::f64::consts::PI * x).sin());
        let out = train_lm(&s, 7, &LmConfig::default(), 3).unwrap();
        let lm = out.lm.as_ref().unwrap();
        assert!(lm.iterations <= 1500);
        let mse = out.model.sse(&s).unwrap() / s.len() as f64;
        assert!(mse < 1e-3, "MSE {mse}");
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn early_stopping_keeps_best_validation_weights() {
        // noisy sine: enough data to overfit with 7 hidden units
        let s = grid(60, |x| (3.0 * x).sin() + 0.3 * (37.0 * x).sin());
        let stop = EarlyStopping::default();
        let out = train_lm_early_stopping(&s, 7, &LmConfig::default(), &stop, 5).unwrap();
        let vals = out.validation_history.as_ref().unwrap();
        let best = vals.iter().copied().fold(f64::INFINITY, f64::min);

        let (_, val_idx) = split_indices(60, 0.8, 5 ^ tags::INNER_SPLIT).unwrap();
        let val = s.subset(&val_idx);
        let got = out.model.sse(&val).unwrap() / val.len() as f64;
        assert_eq!(got, best);
        assert!(best <= vals[0]);

        let again = train_lm_early_stopping(&s, 7, &LmConfig::default(), &stop, 5).unwrap();
        assert_eq!(again.model, out.model);
        let bad = EarlyStopping {
            patience: 0,
            ..stop
        };
        assert!(train_lm_early_stopping(&s, 7, &LmConfig::default(), &bad, 5).is_err());
    }

    #[test]
    fn output_is_bounded_by_weights() {
        let m = MlpModel::random(5, 7, 9);
        let bound = m.output_bias.abs() + m.output_weights.iter().map(|w| w.abs()).sum::<f64>();
        for k in 0..50 {
            let x: Vec<f64> = (0..5)
                .map(|j| ((k * 7 + j * 3) as f64).sin() * 50.0)
                .collect();
            assert!(m.forward(&x).unwrap().abs() <= bound);
        }
    }

    #[test]
    fn json_round_trip() {
        let m = MlpModel::random(5, 7, 12);
        let v = serde_json::to_value(&m).unwrap();
        for k in [
            "hidden_weights",
            "hidden_biases",
            "output_weights",
            "output_bias",
        ] {
            assert!(v.get(k).is_some());
        }
        let back: MlpModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
