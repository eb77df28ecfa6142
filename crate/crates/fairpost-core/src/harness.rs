//! Experiment orchestration: repeated splits with confidence intervals,
//! threshold sweeps, score-source ablation, and the synthetic
//! independence checks.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::baselines;
use crate::cafp::{self, EOBoundCertificate, ScoreTriple};
use crate::dataset::{self, Dataset};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricSet};
use crate::model::{self, LrConfig, Model, ModelKind, ProbClassifier};
use crate::rng;

/// Offset mixed into the repeat seed for the validation carve-out, so the
/// inner split draws an unrelated stream from the outer one.
const VAL_SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Post-processing strategies the harness can evaluate side by side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PostProc {
    /// Plain thresholding of factual scores.
    None,
    /// Threshold the counterfactual-averaged scores.
    Cafp,
    /// Randomized equalized-odds decision mixing fitted on validation.
    EqOdds,
    /// Reject-option relabeling with θ selected on validation.
    Reject,
}

impl PostProc {
    pub fn as_str(&self) -> &'static str {
        match self {
            PostProc::None => "none",
            PostProc::Cafp => "cafp",
            PostProc::EqOdds => "eqodds",
            PostProc::Reject => "reject",
        }
    }
}

/// Everything one benchmark run needs: data identity, model choice,
/// post-processors, and the resampling protocol.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentConfig {
    pub dataset_id: String,
    pub schema_path: String,
    pub model: ModelKind,
    pub postprocessors: Vec<PostProc>,
    pub repeats: usize,
    pub base_seed: u64,
    pub train_fraction: f64,
    pub threshold: f64,
}

impl ExperimentConfig {
    /// Defaults mirror the benchmark protocol: all four post-processors,
    /// 100 repeated 70/30 splits, decisions at 0.5.
    pub fn new(dataset_id: &str, schema_path: &str, model: ModelKind) -> Self {
        Self {
            dataset_id: String::from(dataset_id),
            schema_path: String::from(schema_path),
            model,
            postprocessors: vec![
                PostProc::None,
                PostProc::Cafp,
                PostProc::EqOdds,
                PostProc::Reject,
            ],
            repeats: 100,
            base_seed: 0,
            train_fraction: 0.7,
            threshold: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidConfig(String::from("repeats must be at least 1")));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig(String::from(
                "train_fraction must lie strictly between 0 and 1",
            )));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig(String::from("threshold must lie in [0, 1]")));
        }
        if self.postprocessors.is_empty() {
            return Err(Error::InvalidConfig(String::from("no postprocessors requested")));
        }
        for (i, p) in self.postprocessors.iter().enumerate() {
            if self.postprocessors[..i].contains(p) {
                return Err(Error::InvalidConfig(String::from(
                    "duplicate postprocessor requested",
                )));
            }
        }
        Ok(())
    }
}

/// Mean with sample SD and a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Half-width of the 95% CI for a given sample SD and run count.
pub fn ci_half_width(sd: f64, n: usize) -> f64 {
    1.96 * sd / libm::sqrt(n as f64)
}

/// Sample statistics over per-repeat values; n = 1 collapses to the point.
pub fn summarize(values: &[f64]) -> Result<MetricSummary> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n == 1 {
        0.0
    } else {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        libm::sqrt(ss / (n - 1) as f64)
    };
    let half = ci_half_width(sd, n);
    Ok(MetricSummary { mean, sd, ci_low: mean - half, ci_high: mean + half })
}

/// Per-repeat certificate next to the score-level EOD it is meant to bound.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CertificateSample {
    pub cert: EOBoundCertificate,
    pub score_eod: f64,
}

/// One post-processor's metrics for a single repeat.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub postproc: PostProc,
    pub metrics: MetricSet,
    pub certificate: Option<CertificateSample>,
}

/// Everything a single repeat produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub repeat_index: usize,
    pub rows: Vec<RunRow>,
}

/// Aggregated summaries for every metric in a [`MetricSet`].
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MetricsSummary {
    pub accuracy: MetricSummary,
    pub balanced_accuracy: MetricSummary,
    pub dpd_signed: MetricSummary,
    pub dpd_abs: MetricSummary,
    pub aod_signed: MetricSummary,
    pub aod_abs: MetricSummary,
    pub eod: MetricSummary,
}

/// Certificate statistics across repeats, with the count of repeats where
/// the measured score-level EOD exceeded the bound.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CertificateSummary {
    pub b0: MetricSummary,
    pub b1: MetricSummary,
    pub bound: MetricSummary,
    pub score_eod: MetricSummary,
    pub n0_mean: f64,
    pub n1_mean: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ReportRow {
    pub model: ModelKind,
    pub postproc: PostProc,
    pub metrics: MetricsSummary,
    pub certificate: Option<CertificateSummary>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FairnessReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    /// Successful repeats aggregated into the summaries.
    pub runs: usize,
    pub failed_runs: usize,
}

/// Split, standardize, and train for one repeat. The validation slice is a
/// 20% stratified carve-out of the training split; the standardizer is fit
/// on the remaining 80% the model actually trains on.
struct PipelineState {
    model: Model,
    val: Dataset,
    test: Dataset,
    seed: u64,
}

fn split_and_scale(
    dataset: &Dataset,
    cfg: &ExperimentConfig,
    repeat_index: usize,
) -> Result<(Dataset, Dataset, Dataset, u64)> {
    let seed = cfg.base_seed.wrapping_add(repeat_index as u64);
    let outer = dataset::split(dataset, cfg.train_fraction, seed)?;
    let inner = dataset::split(&outer.train, 0.8, seed.wrapping_add(VAL_SEED_STRIDE))?;
    let mut train = inner.train;
    let mut val = inner.test;
    let mut test = outer.test;
    let scaler = dataset::fit_standardizer(&train);
    scaler.apply(&mut train)?;
    scaler.apply(&mut val)?;
    scaler.apply(&mut test)?;
    Ok((train, val, test, seed))
}

fn repeat_pipeline(
    dataset: &Dataset,
    cfg: &ExperimentConfig,
    repeat_index: usize,
) -> Result<PipelineState> {
    let (train, val, test, seed) = split_and_scale(dataset, cfg, repeat_index)?;
    let model = model::fit_model(cfg.model, &train, seed)?;
    Ok(PipelineState { model, val, test, seed })
}

/// Trains one repeat's model and returns it with that repeat's
/// standardized evaluation split — the single-model entry point behind
/// certification and latency probing.
pub fn fit_pipeline(
    dataset: &Dataset,
    cfg: &ExperimentConfig,
    repeat_index: usize,
) -> Result<(Model, Dataset)> {
    let state = repeat_pipeline(dataset, cfg, repeat_index)?;
    Ok((state.model, state.test))
}

/// The standardized evaluation split of one repeat, without training —
/// for re-evaluating a persisted model under the same protocol and seed.
pub fn eval_split(
    dataset: &Dataset,
    cfg: &ExperimentConfig,
    repeat_index: usize,
) -> Result<Dataset> {
    let (_, _, test, _) = split_and_scale(dataset, cfg, repeat_index)?;
    Ok(test)
}

fn factual_of(triples: &[ScoreTriple]) -> Vec<f64> {
    triples.iter().map(|t| t.p_factual).collect()
}

fn averaged_of(triples: &[ScoreTriple]) -> Vec<f64> {
    triples.iter().map(|t| t.p_avg).collect()
}

fn reject_grid() -> Vec<f64> {
    (0..=50).map(|k| k as f64 * 0.01).collect()
}

/// Runs one repeat end to end and returns metrics for each requested
/// post-processor, in the order the config lists them.
pub fn run_single_repeat(
    dataset: &Dataset,
    cfg: &ExperimentConfig,
    repeat_index: usize,
) -> Result<RunOutput> {
    let state = repeat_pipeline(dataset, cfg, repeat_index)?;
    let test = &state.test;
    let triples = cafp::cafp_batch(&state.model, test)?;
    let factual = factual_of(&triples);
    let averaged = averaged_of(&triples);

    let needs_val = cfg
        .postprocessors
        .iter()
        .any(|p| matches!(p, PostProc::EqOdds | PostProc::Reject));
    let val_factual = if needs_val {
        Some(state.model.predict_batch(&state.val)?)
    } else {
        None
    };

    let mut rows = Vec::with_capacity(cfg.postprocessors.len());
    for &post in &cfg.postprocessors {
        let row = match post {
            PostProc::None => {
                let pred = metrics::apply_threshold(&factual, cfg.threshold);
                RunRow {
                    postproc: post,
                    metrics: MetricSet::compute(&pred, test.y(), test.a(), cfg.threshold)?,
                    certificate: None,
                }
            }
            PostProc::Cafp => {
                let pred = metrics::apply_threshold(&averaged, cfg.threshold);
                let cert = cafp::certificate_from_triples(&triples, test.y())?;
                let score_eod = metrics::score_eod(&averaged, test.y(), test.a())?;
                RunRow {
                    postproc: post,
                    metrics: MetricSet::compute(&pred, test.y(), test.a(), cfg.threshold)?,
                    certificate: Some(CertificateSample { cert, score_eod }),
                }
            }
            PostProc::EqOdds => {
                let vf = val_factual.as_ref().expect("validation scores prepared");
                let mixer =
                    baselines::fit_eqodds(vf, state.val.a(), state.val.y(), state.seed)?;
                let pred = baselines::apply_eqodds(&mixer, &factual, test.a(), state.seed);
                RunRow {
                    postproc: post,
                    metrics: MetricSet::compute(&pred, test.y(), test.a(), 0.5)?,
                    certificate: None,
                }
            }
            PostProc::Reject => {
                let vf = val_factual.as_ref().expect("validation scores prepared");
                let rule =
                    baselines::select_theta(vf, state.val.a(), state.val.y(), &reject_grid())?;
                let pred = baselines::apply_reject_option(&rule, &factual, test.a());
                RunRow {
                    postproc: post,
                    metrics: MetricSet::compute(&pred, test.y(), test.a(), 0.5)?,
                    certificate: None,
                }
            }
        };
        rows.push(row);
    }
    Ok(RunOutput { repeat_index, rows })
}

/// Folds per-repeat outputs into a report. Failed repeats are tolerated up
/// to 20% of the total; beyond that the experiment aborts. Outputs are
/// sorted by repeat index first so aggregation ignores completion order.
pub fn aggregate(
    cfg: &ExperimentConfig,
    outputs: Vec<Result<RunOutput>>,
) -> Result<FairnessReport> {
    let total = outputs.len();
    let mut successes: Vec<RunOutput> = Vec::with_capacity(total);
    let mut first_error = None;
    for out in outputs {
        match out {
            Ok(o) => successes.push(o),
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }
    let failed = total - successes.len();
    if successes.is_empty() || (successes.len() as f64) < 0.8 * total as f64 - 1e-9 {
        return Err(first_error.unwrap_or(Error::TooManyFailures { failed, total }));
    }
    successes.sort_by_key(|o| o.repeat_index);

    let mut rows = Vec::with_capacity(cfg.postprocessors.len());
    for (slot, &post) in cfg.postprocessors.iter().enumerate() {
        let mut sets: Vec<&MetricSet> = Vec::with_capacity(successes.len());
        let mut certs: Vec<CertificateSample> = Vec::new();
        for run in &successes {
            let row = run.rows.get(slot).ok_or(Error::ShapeMismatch {
                expected: cfg.postprocessors.len(),
                got: run.rows.len(),
            })?;
            if row.postproc != post {
                return Err(Error::InvalidConfig(String::from(
                    "repeat outputs disagree with config postprocessor order",
                )));
            }
            sets.push(&row.metrics);
            if let Some(c) = row.certificate {
                certs.push(c);
            }
        }
        let col = |f: fn(&MetricSet) -> f64| -> Result<MetricSummary> {
            let vals: Vec<f64> = sets.iter().map(|s| f(s)).collect();
            summarize(&vals)
        };
        let metrics = MetricsSummary {
            accuracy: col(|s| s.accuracy)?,
            balanced_accuracy: col(|s| s.balanced_accuracy)?,
            dpd_signed: col(|s| s.dpd_signed)?,
            dpd_abs: col(|s| s.dpd_abs)?,
            aod_signed: col(|s| s.aod_signed)?,
            aod_abs: col(|s| s.aod_abs)?,
            eod: col(|s| s.eod)?,
        };
        let certificate = if certs.is_empty() {
            None
        } else {
            let cc = |f: fn(&CertificateSample) -> f64| -> Result<MetricSummary> {
                let vals: Vec<f64> = certs.iter().map(|c| f(c)).collect();
                summarize(&vals)
            };
            let violations = certs
                .iter()
                .filter(|c| c.score_eod > c.cert.bound + 1e-9)
                .count();
            Some(CertificateSummary {
                b0: cc(|c| c.cert.b0)?,
                b1: cc(|c| c.cert.b1)?,
                bound: cc(|c| c.cert.bound)?,
                score_eod: cc(|c| c.score_eod)?,
                n0_mean: certs.iter().map(|c| c.cert.n0 as f64).sum::<f64>()
                    / certs.len() as f64,
                n1_mean: certs.iter().map(|c| c.cert.n1 as f64).sum::<f64>()
                    / certs.len() as f64,
                violations,
            })
        };
        rows.push(ReportRow { model: cfg.model, postproc: post, metrics, certificate });
    }
    Ok(FairnessReport {
        config: cfg.clone(),
        rows,
        runs: successes.len(),
        failed_runs: failed,
    })
}

/// Repeated-split benchmark: every repeat re-splits, re-trains, and
/// re-fits the baselines; summaries carry mean ± 1.96·SD/√runs.
pub fn run_experiment(dataset: &Dataset, cfg: &ExperimentConfig) -> Result<FairnessReport> {
    cfg.validate()?;
    let outputs: Vec<Result<RunOutput>> = (0..cfg.repeats)
        .map(|r| run_single_repeat(dataset, cfg, r))
        .collect();
    aggregate(cfg, outputs)
}

/// Column-oriented sweep table: balanced accuracy and signed DPD at each
/// threshold for factual scores, averaged scores, and the (fixed,
/// threshold-independent) equalized-odds decisions.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SweepResult {
    pub thresholds: Vec<f64>,
    pub base_balanced_accuracy: Vec<f64>,
    pub base_dpd: Vec<f64>,
    pub cafp_balanced_accuracy: Vec<f64>,
    pub cafp_dpd: Vec<f64>,
    pub eqodds_balanced_accuracy: Vec<f64>,
    pub eqodds_dpd: Vec<f64>,
}

/// 25 points spanning [0.01, 0.99]; endpoints exact by interpolation.
pub fn sweep_thresholds() -> Vec<f64> {
    (0..25)
        .map(|i| {
            let w = i as f64 / 24.0;
            0.01 * (1.0 - w) + 0.99 * w
        })
        .collect()
}

/// Sweeps decisions across thresholds on the first repeat's fitted
/// pipeline. The equalized-odds mixer ignores the threshold, so its row
/// repeats its fixed value.
pub fn threshold_sweep(dataset: &Dataset, cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let state = repeat_pipeline(dataset, cfg, 0)?;
    let test = &state.test;
    let triples = cafp::cafp_batch(&state.model, test)?;
    let factual = factual_of(&triples);
    let averaged = averaged_of(&triples);

    let val_factual = state.model.predict_batch(&state.val)?;
    let mixer = baselines::fit_eqodds(&val_factual, state.val.a(), state.val.y(), state.seed)?;
    let eq_pred = baselines::apply_eqodds(&mixer, &factual, test.a(), state.seed);
    let eq_ba = metrics::balanced_accuracy(&eq_pred, test.y())?;
    let (eq_dpd, _) = metrics::dpd(&eq_pred, test.a())?;

    let thresholds = sweep_thresholds();
    let mut out = SweepResult {
        thresholds: thresholds.clone(),
        base_balanced_accuracy: Vec::with_capacity(25),
        base_dpd: Vec::with_capacity(25),
        cafp_balanced_accuracy: Vec::with_capacity(25),
        cafp_dpd: Vec::with_capacity(25),
        eqodds_balanced_accuracy: vec![eq_ba; thresholds.len()],
        eqodds_dpd: vec![eq_dpd; thresholds.len()],
    };
    for &t in &thresholds {
        let base_pred = metrics::apply_threshold(&factual, t);
        out.base_balanced_accuracy
            .push(metrics::balanced_accuracy(&base_pred, test.y())?);
        out.base_dpd.push(metrics::dpd(&base_pred, test.a())?.0);
        let cafp_pred = metrics::apply_threshold(&averaged, t);
        out.cafp_balanced_accuracy
            .push(metrics::balanced_accuracy(&cafp_pred, test.y())?);
        out.cafp_dpd.push(metrics::dpd(&cafp_pred, test.a())?.0);
    }
    Ok(out)
}

/// Which score vector an ablation row thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreVariant {
    Factual,
    Counterfactual,
    Averaged,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AblationRow {
    pub variant: ScoreVariant,
    pub accuracy: f64,
    pub dpd_signed: f64,
    pub aod_signed: f64,
}

/// Ablation rows plus the underlying score vectors for plotting.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
    pub factual: Vec<f64>,
    pub counterfactual: Vec<f64>,
    pub averaged: Vec<f64>,
}

/// Thresholds factual, counterfactual, and averaged scores at 0.5 on the
/// given evaluation set.
pub fn ablation_from_model<M: ProbClassifier>(
    model: &M,
    test: &Dataset,
) -> Result<AblationTable> {
    let triples = cafp::cafp_batch(model, test)?;
    let factual = factual_of(&triples);
    let counterfactual: Vec<f64> = triples.iter().map(|t| t.p_counterfactual).collect();
    let averaged = averaged_of(&triples);
    let mut rows = Vec::with_capacity(3);
    for (variant, scores) in [
        (ScoreVariant::Factual, &factual),
        (ScoreVariant::Counterfactual, &counterfactual),
        (ScoreVariant::Averaged, &averaged),
    ] {
        let pred = metrics::apply_threshold(scores, 0.5);
        rows.push(AblationRow {
            variant,
            accuracy: metrics::accuracy(&pred, test.y())?,
            dpd_signed: metrics::dpd(&pred, test.a())?.0,
            aod_signed: metrics::aod(&pred, test.y(), test.a())?.0,
        });
    }
    Ok(AblationTable { rows, factual, counterfactual, averaged })
}

/// Ablation on the first repeat's fitted pipeline.
pub fn ablation(dataset: &Dataset, cfg: &ExperimentConfig) -> Result<AblationTable> {
    cfg.validate()?;
    let state = repeat_pipeline(dataset, cfg, 0)?;
    ablation_from_model(&state.model, &state.test)
}

/// Configuration for the synthetic independence suite.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub n: usize,
    /// Direct protected-attribute coefficient in the label model.
    pub a_coefficient: f64,
    /// Shift added to the first feature for a = 1 rows; nonzero values
    /// correlate X with A and void the independence premise.
    pub confound: f64,
}

impl SyntheticConfig {
    pub fn new(seed: u64, n: usize) -> Self {
        Self { seed, n, a_coefficient: 1.5, confound: 0.0 }
    }
}

/// Ground-truth feature weights of the synthetic generator.
const SYNTH_WEIGHTS: [f64; 5] = [1.0, 0.8, -1.2, 0.6, -0.5];

/// Draws n rows with X ~ N(0, I₅), A ~ Bernoulli(½), and labels from a
/// logistic model with the configured direct A coefficient.
pub fn make_synthetic(cfg: &SyntheticConfig) -> Result<Dataset> {
    let mut r = rng::seeded(cfg.seed);
    let d = SYNTH_WEIGHTS.len();
    let mut x = Vec::with_capacity(cfg.n * d);
    let mut a = Vec::with_capacity(cfg.n);
    let mut y = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let ai = u8::from(rng::bernoulli(&mut r, 0.5));
        let mut z = cfg.a_coefficient * f64::from(ai);
        for (j, w) in SYNTH_WEIGHTS.iter().enumerate() {
            let mut v = rng::standard_normal(&mut r);
            if j == 0 {
                v += cfg.confound * f64::from(ai);
            }
            x.push(v);
            z += w * v;
        }
        a.push(ai);
        y.push(u8::from(rng::bernoulli(&mut r, model::sigmoid(z))));
    }
    let names = (0..d).map(|j| alloc::format!("x{j}")).collect();
    Dataset::new(x, a, y, names, vec![true; d])
}

/// One theorem check with its measured value and requirement. The
/// allowance is a finite-sample slack for checks comparing two sample
/// estimates (zero for the strict checks); passed means measured ≤
/// required + allowance. A waived check failed only because the
/// independence premise was deliberately violated; the ledger keeps the
/// number but does not count it against the suite.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TheoremCheck {
    pub name: &'static str,
    pub measured: f64,
    pub required: f64,
    pub allowance: f64,
    pub passed: bool,
    pub waived: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SyntheticLedger {
    pub checks: Vec<TheoremCheck>,
    pub premise_violated: bool,
    pub n: usize,
    pub seed: u64,
}

impl SyntheticLedger {
    /// True when every check either passed or was waived for a violated
    /// premise.
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed || c.waived)
    }
}

/// Trains LR on synthetic data where X ⊥ A by construction and checks the
/// averaging guarantees: exact distortion identity, near-zero score
/// demographic parity, vanishing mutual information, and the certificate
/// bounding the score-level equalized-odds gap.
///
/// With a nonzero confound the premise is violated on purpose; the
/// distortion identity still must hold (it is algebraic), while the
/// independence-based checks are recorded but waived.
pub fn synthetic_theorem_suite(cfg: &SyntheticConfig) -> Result<SyntheticLedger> {
    if cfg.n < 1000 {
        return Err(Error::InvalidConfig(String::from(
            "synthetic suite needs at least 1000 rows",
        )));
    }
    let ds = make_synthetic(cfg)?;
    let lr_cfg = LrConfig { seed: cfg.seed, ..Default::default() };
    let model = model::train_logistic(&ds, &lr_cfg)?;
    let triples = cafp::cafp_batch(&model, &ds)?;
    let factual = factual_of(&triples);
    let averaged = averaged_of(&triples);
    let premise_violated = cfg.confound != 0.0;

    let mut checks = Vec::with_capacity(5);
    let mut push = |name, measured: f64, required: f64, allowance: f64, waivable: bool| {
        let passed = measured <= required + allowance;
        checks.push(TheoremCheck {
            name,
            measured,
            required,
            allowance,
            passed,
            waived: waivable && premise_violated && !passed,
        });
    };

    let identity_err = triples
        .iter()
        .map(|t| ((t.p_factual - t.p_avg).abs() - 0.5 * t.cb.abs()).abs())
        .fold(0.0f64, f64::max);
    push("distortion_identity", identity_err, 1e-12, 0.0, false);

    let mut sums = [0.0f64; 2];
    let (n0, n1) = ds.group_counts();
    for (s, &ai) in averaged.iter().zip(ds.a()) {
        sums[ai as usize] += s;
    }
    let score_dpd = (sums[0] / n0 as f64 - sums[1] / n1 as f64).abs();
    push("score_dpd", score_dpd, 0.01, 0.0, true);

    // The two comparative checks pit one sample estimate against another,
    // so they get an explicit finite-sample allowance: the plug-in MI
    // bias (bins−1)/(2n), and 2/√n for the group-mean gap behind the
    // score EOD. Both vanish against the coefficients the suite injects;
    // they only matter in the degenerate no-bias case where the true
    // quantities are all zero.
    let n_f = cfg.n as f64;
    let mi_avg = metrics::mutual_info(&averaged, ds.a(), 20).nats;
    let mi_fact = metrics::mutual_info(&factual, ds.a(), 20).nats;
    push("mi_small", mi_avg, 0.005, 0.0, true);
    push("mi_below_factual", mi_avg, mi_fact, 19.0 / (2.0 * n_f), true);

    let cert = cafp::certificate_from_triples(&triples, ds.y())?;
    let seod = metrics::score_eod(&averaged, ds.y(), ds.a())?;
    push("score_eod_bounded", seod, cert.bound, 2.0 / libm::sqrt(n_f), true);

    Ok(SyntheticLedger { checks, premise_violated, n: cfg.n, seed: cfg.seed })
}
