//! Logistic regression scorer and the model enum shared by the harness.
//!
//! All models consume the feature vector with the protected attribute
//! appended as the final input column, which is what lets the averaging
//! post-processor query counterfactual scores for either group. Proxy
//! features inside `x` are deliberately left untouched by that flip.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng;
use crate::tree::{ForestModel, GbtModel};

/// Logistic score over `[features..., a]`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LogisticModel {
    /// One weight per feature plus a trailing weight for the protected
    /// attribute column.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub meta: TrainingMeta,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainingMeta {
    pub iterations: usize,
    pub final_loss: f64,
    pub converged: bool,
}

/// Full-batch gradient descent settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LrConfig {
    pub learning_rate: f64,
    pub l2_penalty: f64,
    pub max_iters: usize,
    pub tolerance: f64,
    /// Unused by the optimizer itself (descent from zero weights is
    /// deterministic); present so every trainer shares a config shape.
    pub seed: u64,
}

impl Default for LrConfig {
    fn default() -> Self {
        Self { learning_rate: 0.1, l2_penalty: 1e-4, max_iters: 2000, tolerance: 1e-6, seed: 0 }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-z))
}

/// Mean log-loss of probabilities `p` against labels, clamped away from 0/1.
fn log_loss(p: &[f64], y: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..p.len() {
        let pi = p[i].clamp(1e-12, 1.0 - 1e-12);
        total -= y[i] * libm::log(pi) + (1.0 - y[i]) * libm::log(1.0 - pi);
    }
    total / p.len() as f64
}

struct Design {
    x: Vec<f64>, // n rows of d features + protected column
    y: Vec<f64>,
    n: usize,
    d: usize, // columns including the protected one
}

impl Design {
    fn from_dataset(ds: &Dataset) -> Self {
        let d = ds.d() + 1;
        let mut x = Vec::with_capacity(ds.n() * d);
        for i in 0..ds.n() {
            x.extend_from_slice(ds.row(i));
            x.push(ds.a()[i] as f64);
        }
        let y = ds.y().iter().map(|&v| v as f64).collect();
        Self { x, y, n: ds.n(), d }
    }

    fn probabilities(&self, weights: &[f64], bias: f64, out: &mut [f64]) {
        for i in 0..self.n {
            let row = &self.x[i * self.d..(i + 1) * self.d];
            let mut z = bias;
            for j in 0..self.d {
                z += weights[j] * row[j];
            }
            out[i] = sigmoid(z);
        }
    }

    /// Mean-loss gradient with L2 on the weights (bias unpenalized).
    fn gradient(&self, p: &[f64], weights: &[f64], l2: f64, gw: &mut [f64], gb: &mut f64) {
        gw.fill(0.0);
        *gb = 0.0;
        for i in 0..self.n {
            let r = p[i] - self.y[i];
            let row = &self.x[i * self.d..(i + 1) * self.d];
            for j in 0..self.d {
                gw[j] += r * row[j];
            }
            *gb += r;
        }
        let inv = 1.0 / self.n as f64;
        for j in 0..self.d {
            gw[j] = gw[j] * inv + l2 * weights[j];
        }
        *gb *= inv;
    }

    fn loss(&self, weights: &[f64], bias: f64, l2: f64, scratch: &mut [f64]) -> f64 {
        self.probabilities(weights, bias, scratch);
        let penalty = 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
        log_loss(scratch, &self.y) + penalty
    }
}

/// Fits by full-batch gradient descent from zero weights.
///
/// The step size starts at `learning_rate` and backtracks (halves, retrying
/// the step) whenever a step would increase the loss; accepted steps let it
/// grow again by 1.2x up to 1.0. Training stops when every gradient
/// component is below `tolerance` in magnitude, when `max_iters` is
/// reached, or when backtracking stalls below a 1e-12 step.
pub fn train_logistic(train: &Dataset, cfg: &LrConfig) -> Result<LogisticModel> {
    if train.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let design = Design::from_dataset(train);
    let d = design.d;
    let mut weights = vec![0.0; d];
    let mut bias = 0.0;
    let mut gw = vec![0.0; d];
    let mut gb = 0.0;
    let mut p = vec![0.0; design.n];
    let mut scratch = vec![0.0; design.n];

    let mut lr = cfg.learning_rate;
    let mut loss = design.loss(&weights, bias, cfg.l2_penalty, &mut scratch);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=cfg.max_iters {
        design.probabilities(&weights, bias, &mut p);
        design.gradient(&p, &weights, cfg.l2_penalty, &mut gw, &mut gb);
        let gmax = gw.iter().map(|g| g.abs()).fold(gb.abs(), f64::max);
        if gmax < cfg.tolerance {
            converged = true;
            break;
        }
        let mut stalled = false;
        loop {
            let cand_w: Vec<f64> = weights.iter().zip(&gw).map(|(w, g)| w - lr * g).collect();
            let cand_b = bias - lr * gb;
            let cand_loss = design.loss(&cand_w, cand_b, cfg.l2_penalty, &mut scratch);
            if !cand_loss.is_finite() {
                return Err(Error::Divergence { iteration: iter });
            }
            if cand_loss <= loss + 1e-12 {
                weights = cand_w;
                bias = cand_b;
                loss = cand_loss;
                lr = (lr * 1.2).min(1.0);
                break;
            }
            lr *= 0.5;
            if lr < 1e-12 {
                stalled = true;
                break;
            }
        }
        iterations = iter;
        if stalled {
            break;
        }
    }

    Ok(LogisticModel {
        weights,
        bias,
        meta: TrainingMeta { iterations, final_loss: loss, converged },
    })
}

impl LogisticModel {
    /// Score for a feature row and a protected attribute value.
    pub fn predict_proba(&self, x: &[f64], a: u8) -> Result<f64> {
        if x.len() + 1 != self.weights.len() {
            return Err(Error::ShapeMismatch { expected: self.weights.len() - 1, got: x.len() });
        }
        let mut z = self.bias;
        for j in 0..x.len() {
            z += self.weights[j] * x[j];
        }
        z += self.weights[x.len()] * a as f64;
        Ok(sigmoid(z))
    }
}

/// Compares the analytic training gradient against central finite
/// differences (step 1e-5) at either zero weights or seeded random
/// weights; returns the max relative error across components.
pub fn gradient_check(train: &Dataset, weight_seed: Option<u64>) -> Result<f64> {
    if train.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let design = Design::from_dataset(train);
    let l2 = LrConfig::default().l2_penalty;
    let (weights, bias) = match weight_seed {
        None => (vec![0.0; design.d], 0.0),
        Some(seed) => {
            let mut r = rng::seeded(seed);
            let w = (0..design.d).map(|_| 0.5 * rng::standard_normal(&mut r)).collect();
            (w, 0.5 * rng::standard_normal(&mut r))
        }
    };
    let mut p = vec![0.0; design.n];
    design.probabilities(&weights, bias, &mut p);
    let mut gw = vec![0.0; design.d];
    let mut gb = 0.0;
    design.gradient(&p, &weights, l2, &mut gw, &mut gb);

    let mut scratch = vec![0.0; design.n];
    let eps = 1e-5;
    let mut worst = 0.0f64;
    for j in 0..design.d {
        let mut wp = weights.clone();
        let mut wm = weights.clone();
        wp[j] += eps;
        wm[j] -= eps;
        let fd = (design.loss(&wp, bias, l2, &mut scratch)
            - design.loss(&wm, bias, l2, &mut scratch))
            / (2.0 * eps);
        worst = worst.max((fd - gw[j]).abs() / gw[j].abs().max(1e-8));
    }
    let fd = (design.loss(&weights, bias + eps, l2, &mut scratch)
        - design.loss(&weights, bias - eps, l2, &mut scratch))
        / (2.0 * eps);
    worst = worst.max((fd - gb).abs() / gb.abs().max(1e-8));
    Ok(worst)
}

/// Anything that scores a feature row under a given protected value.
///
/// The post-processors only need this interface, so tests can drive them
/// with stub scorers.
pub trait ProbClassifier {
    fn predict_proba(&self, x: &[f64], a: u8) -> Result<f64>;
}

impl ProbClassifier for LogisticModel {
    fn predict_proba(&self, x: &[f64], a: u8) -> Result<f64> {
        LogisticModel::predict_proba(self, x, a)
    }
}

impl ProbClassifier for ForestModel {
    fn predict_proba(&self, x: &[f64], a: u8) -> Result<f64> {
        ForestModel::predict_proba(self, x, a)
    }
}

impl ProbClassifier for GbtModel {
    fn predict_proba(&self, x: &[f64], a: u8) -> Result<f64> {
        GbtModel::predict_proba(self, x, a)
    }
}

/// Which scorer the harness trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    Rf,
    Gbt,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Rf => "rf",
            ModelKind::Gbt => "gbt",
        }
    }
}

/// A trained scorer of any supported kind.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Lr(LogisticModel),
    Rf(ForestModel),
    Gbt(GbtModel),
}

impl Model {
    pub fn predict_proba(&self, x: &[f64], a: u8) -> Result<f64> {
        match self {
            Model::Lr(m) => m.predict_proba(x, a),
            Model::Rf(m) => m.predict_proba(x, a),
            Model::Gbt(m) => m.predict_proba(x, a),
        }
    }

    /// Factual scores for every row of a dataset.
    pub fn predict_batch(&self, ds: &Dataset) -> Result<Vec<f64>> {
        (0..ds.n()).map(|i| self.predict_proba(ds.row(i), ds.a()[i])).collect()
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Lr(_) => ModelKind::Lr,
            Model::Rf(_) => ModelKind::Rf,
            Model::Gbt(_) => ModelKind::Gbt,
        }
    }
}

impl ProbClassifier for Model {
    fn predict_proba(&self, x: &[f64], a: u8) -> Result<f64> {
        Model::predict_proba(self, x, a)
    }
}

/// Trains a model of the requested kind with its default configuration.
pub fn fit_model(kind: ModelKind, train: &Dataset, seed: u64) -> Result<Model> {
    match kind {
        ModelKind::Lr => {
            let cfg = LrConfig { seed, ..Default::default() };
            Ok(Model::Lr(train_logistic(train, &cfg)?))
        }
        ModelKind::Rf => {
            let cfg = crate::tree::ForestConfig { seed, ..Default::default() };
            Ok(Model::Rf(crate::tree::train_forest(train, &cfg)?))
        }
        ModelKind::Gbt => {
            let cfg = crate::tree::GbtConfig { seed, ..Default::default() };
            Ok(Model::Gbt(crate::tree::train_gbt(train, &cfg)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;
    use proptest::prelude::*;

    fn toy_separable() -> Dataset {
        // One feature; negatives below zero, positives above.
        let x = vec![-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0];
        let y = vec![0, 0, 0, 0, 1, 1, 1, 1];
        let a = vec![0, 1, 0, 1, 0, 1, 0, 1];
        Dataset::new(x, a, y, vec![String::from("f0")], vec![true]).unwrap()
    }

    #[test]
    fn sigmoid_of_ln3() {
        assert!((sigmoid(libm::log(3.0)) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_model_predicts_half() {
        let m = LogisticModel {
            weights: vec![0.0, 0.0],
            bias: 0.0,
            meta: TrainingMeta { iterations: 0, final_loss: 0.0, converged: false },
        };
        assert_eq!(m.predict_proba(&[3.7], 1).unwrap(), 0.5);
    }

    #[test]
    fn zero_protected_coefficient_ignores_a() {
        let m = LogisticModel {
            weights: vec![1.0, 0.0],
            bias: 0.0,
            meta: TrainingMeta { iterations: 0, final_loss: 0.0, converged: false },
        };
        assert_eq!(m.predict_proba(&[0.0], 0).unwrap(), 0.5);
        assert_eq!(m.predict_proba(&[0.0], 1).unwrap(), 0.5);
    }

    #[test]
    fn zero_iterations_means_half_everywhere() {
        let ds = toy_separable();
        let cfg = LrConfig { max_iters: 0, ..Default::default() };
        let m = train_logistic(&ds, &cfg).unwrap();
        for i in 0..ds.n() {
            assert_eq!(m.predict_proba(ds.row(i), ds.a()[i]).unwrap(), 0.5);
        }
        assert_eq!(m.meta.iterations, 0);
        assert!(!m.meta.converged);
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let ds = toy_separable();
        let m = train_logistic(&ds, &LrConfig::default()).unwrap();
        assert!(m.weights[0] > 0.0);
        for i in 0..ds.n() {
            let p = m.predict_proba(ds.row(i), ds.a()[i]).unwrap();
            assert_eq!(u8::from(p >= 0.5), ds.y()[i], "row {i} score {p}");
        }
    }

    #[test]
    fn loss_is_monotone_in_iteration_count() {
        let ds = toy_separable();
        let mut last = f64::INFINITY;
        for iters in [1, 2, 4, 8, 16, 32, 64] {
            let cfg = LrConfig { learning_rate: 1e-3, max_iters: iters, ..Default::default() };
            let m = train_logistic(&ds, &cfg).unwrap();
            assert!(
                m.meta.final_loss <= last + 1e-12,
                "loss rose from {last} to {} at {iters} iters",
                m.meta.final_loss
            );
            last = m.meta.final_loss;
        }
    }

    #[test]
    fn gradient_check_zero_and_random_weights() {
        let ds = toy_separable();
        assert!(gradient_check(&ds, None).unwrap() < 1e-5);
        for seed in 0..5 {
            let err = gradient_check(&ds, Some(seed)).unwrap();
            assert!(err < 1e-5, "seed {seed}: {err}");
        }
    }

    #[test]
    fn gradient_check_with_constant_feature_column() {
        let x = vec![1.0, -2.0, 1.0, -1.0, 1.0, 2.0, 1.0, 1.0];
        let y = vec![0, 0, 1, 1];
        let a = vec![0, 1, 0, 1];
        let ds = Dataset::new(
            x,
            a,
            y,
            vec![String::from("const"), String::from("f1")],
            vec![true, true],
        )
        .unwrap();
        assert!(gradient_check(&ds, Some(3)).unwrap() < 1e-5);
    }

    #[test]
    fn four_point_toy_matches_grid_search_oracle() {
        // Symmetric in a, so the optimum lives in the (weight, bias) plane;
        // the oracle is an independent evaluation of the regularized loss
        // over a coarse 2-D grid.
        let ds = Dataset::new(
            vec![-1.0, -1.0, 1.0, 1.0],
            vec![0, 1, 0, 1],
            vec![0, 0, 1, 1],
            vec![String::from("f0")],
            vec![true],
        )
        .unwrap();
        let m = train_logistic(&ds, &LrConfig::default()).unwrap();
        let l2 = LrConfig::default().l2_penalty;

        let naive_loss = |w0: f64, b: f64| {
            let mut total = 0.0;
            for i in 0..ds.n() {
                let z = w0 * ds.row(i)[0] + b;
                let p = (1.0 / (1.0 + libm::exp(-z))).clamp(1e-12, 1.0 - 1e-12);
                let yi = ds.y()[i] as f64;
                total -= yi * libm::log(p) + (1.0 - yi) * libm::log(1.0 - p);
            }
            total / ds.n() as f64 + 0.5 * l2 * w0 * w0
        };

        let mut best = f64::INFINITY;
        for i in 0..=200 {
            for k in 0..=200 {
                let w0 = -10.0 + i as f64 * 0.1;
                let b = -10.0 + k as f64 * 0.1;
                best = best.min(naive_loss(w0, b));
            }
        }
        assert!(
            m.meta.final_loss <= best + 1e-2,
            "fitted loss {} vs grid best {best}",
            m.meta.final_loss
        );
    }

    #[test]
    fn predict_dimension_mismatch_errors() {
        let ds = toy_separable();
        let m = train_logistic(&ds, &LrConfig::default()).unwrap();
        assert!(matches!(
            m.predict_proba(&[1.0, 2.0], 0),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn fit_is_deterministic() {
        let mut r = rng::seeded(4);
        let n = 60;
        let x: Vec<f64> = (0..n * 2).map(|_| rng::standard_normal(&mut r)).collect();
        let a: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let y: Vec<u8> = (0..n)
            .map(|i| u8::from(x[i * 2] + 0.5 * x[i * 2 + 1] > 0.0))
            .collect();
        let ds = Dataset::new(
            x,
            a,
            y,
            vec![String::from("f0"), String::from("f1")],
            vec![true, true],
        )
        .unwrap();
        let m1 = train_logistic(&ds, &LrConfig::default()).unwrap();
        let m2 = train_logistic(&ds, &LrConfig::default()).unwrap();
        assert_eq!(m1, m2);
    }

    proptest! {
        #[test]
        fn probabilities_stay_in_unit_interval(
            w0 in -50.0f64..50.0, wa in -50.0f64..50.0, b in -50.0f64..50.0,
            x in -1e6f64..1e6, a in 0u8..2,
        ) {
            let m = LogisticModel {
                weights: vec![w0, wa],
                bias: b,
                meta: TrainingMeta { iterations: 0, final_loss: 0.0, converged: false },
            };
            let p = m.predict_proba(&[x], a).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
