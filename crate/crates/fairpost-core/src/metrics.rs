//! Group fairness and utility metrics, plus a histogram mutual-information
//! estimator for score leakage.
//!
//! Sign convention throughout: gaps are unprivileged minus privileged
//! (`a = 0` minus `a = 1`), so a model that favors the privileged group
//! yields negative signed disparities.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Decision metrics at a fixed threshold.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub dpd_signed: f64,
    pub dpd_abs: f64,
    pub aod_signed: f64,
    pub aod_abs: f64,
    pub eod: f64,
    pub threshold: f64,
}

impl MetricSet {
    /// Computes every decision metric for predictions made at `threshold`.
    pub fn compute(pred: &[u8], y: &[u8], a: &[u8], threshold: f64) -> Result<Self> {
        let (dpd_signed, dpd_abs) = dpd(pred, a)?;
        let (aod_signed, aod_abs) = aod(pred, y, a)?;
        Ok(Self {
            accuracy: accuracy(pred, y)?,
            balanced_accuracy: balanced_accuracy(pred, y)?,
            dpd_signed,
            dpd_abs,
            aod_signed,
            aod_abs,
            eod: eod(pred, y, a)?,
            threshold,
        })
    }
}

/// Plug-in mutual information estimate between scores and the protected
/// attribute.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MIEstimate {
    /// Estimate in nats; non-negative up to floating error.
    pub nats: f64,
    pub bins: usize,
    pub n: usize,
}

/// Per-group confusion rates. A rate is `None` when its denominator cell
/// is empty; metrics that need it then report a degenerate-cell error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupRates {
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub positive_rate: f64,
}

fn check_lengths(lens: &[usize]) -> Result<()> {
    if lens[0] == 0 {
        return Err(Error::EmptyInput);
    }
    for &l in &lens[1..] {
        if l != lens[0] {
            return Err(Error::ShapeMismatch { expected: lens[0], got: l });
        }
    }
    Ok(())
}

fn require_groups(a: &[u8]) -> Result<()> {
    for g in 0..2u8 {
        if !a.contains(&g) {
            return Err(Error::MissingGroup(g));
        }
    }
    Ok(())
}

fn require_labels(y: &[u8]) -> Result<()> {
    for lbl in 0..2u8 {
        if !y.contains(&lbl) {
            return Err(Error::MissingLabel(lbl));
        }
    }
    Ok(())
}

/// TPR, FPR, and positive rate for each protected group, indexed by `a`.
pub fn confusion_rates(pred: &[u8], y: &[u8], a: &[u8]) -> Result<[GroupRates; 2]> {
    check_lengths(&[pred.len(), y.len(), a.len()])?;
    require_groups(a)?;
    let mut out = [GroupRates { tpr: None, fpr: None, positive_rate: 0.0 }; 2];
    for g in 0..2u8 {
        let mut tp = 0usize;
        let mut pos = 0usize;
        let mut fp = 0usize;
        let mut neg = 0usize;
        let mut predicted_pos = 0usize;
        let mut size = 0usize;
        for i in 0..a.len() {
            if a[i] != g {
                continue;
            }
            size += 1;
            if pred[i] == 1 {
                predicted_pos += 1;
            }
            if y[i] == 1 {
                pos += 1;
                if pred[i] == 1 {
                    tp += 1;
                }
            } else {
                neg += 1;
                if pred[i] == 1 {
                    fp += 1;
                }
            }
        }
        out[g as usize] = GroupRates {
            tpr: (pos > 0).then(|| tp as f64 / pos as f64),
            fpr: (neg > 0).then(|| fp as f64 / neg as f64),
            positive_rate: predicted_pos as f64 / size as f64,
        };
    }
    Ok(out)
}

/// Demographic parity difference: `(signed, abs)` with
/// signed = P(ŷ=1 | a=0) − P(ŷ=1 | a=1).
pub fn dpd(pred: &[u8], a: &[u8]) -> Result<(f64, f64)> {
    check_lengths(&[pred.len(), a.len()])?;
    require_groups(a)?;
    let mut rate = [0.0f64; 2];
    for g in 0..2usize {
        let members = a.iter().filter(|&&ai| ai as usize == g).count();
        let hits = a
            .iter()
            .zip(pred)
            .filter(|&(&ai, &pi)| ai as usize == g && pi == 1)
            .count();
        rate[g] = hits as f64 / members as f64;
    }
    let signed = rate[0] - rate[1];
    Ok((signed, signed.abs()))
}

/// Average odds difference: `(signed, abs)` with
/// signed = ½[(TPR₀−TPR₁) + (FPR₀−FPR₁)] and abs = ½[|ΔTPR| + |ΔFPR|].
pub fn aod(pred: &[u8], y: &[u8], a: &[u8]) -> Result<(f64, f64)> {
    let rates = confusion_rates(pred, y, a)?;
    let need = |r: Option<f64>, g: u8, label: u8| {
        r.ok_or(Error::DegenerateCell { group: g, label })
    };
    let dtpr = need(rates[0].tpr, 0, 1)? - need(rates[1].tpr, 1, 1)?;
    let dfpr = need(rates[0].fpr, 0, 0)? - need(rates[1].fpr, 1, 0)?;
    Ok((0.5 * (dtpr + dfpr), 0.5 * (dtpr.abs() + dfpr.abs())))
}

/// Equalized-odds difference: max over y of the absolute gap in
/// P(ŷ=1 | a, Y=y) between groups.
pub fn eod(pred: &[u8], y: &[u8], a: &[u8]) -> Result<f64> {
    let rates = confusion_rates(pred, y, a)?;
    let need = |r: Option<f64>, g: u8, label: u8| {
        r.ok_or(Error::DegenerateCell { group: g, label })
    };
    let dtpr = need(rates[0].tpr, 0, 1)? - need(rates[1].tpr, 1, 1)?;
    let dfpr = need(rates[0].fpr, 0, 0)? - need(rates[1].fpr, 1, 0)?;
    Ok(dtpr.abs().max(dfpr.abs()))
}

/// Score-level equalized odds: max over y of the absolute gap in
/// group-conditional mean scores.
pub fn score_eod(scores: &[f64], y: &[u8], a: &[u8]) -> Result<f64> {
    check_lengths(&[scores.len(), y.len(), a.len()])?;
    require_groups(a)?;
    require_labels(y)?;
    let mut worst = 0.0f64;
    for lbl in 0..2u8 {
        let mut sums = [0.0f64; 2];
        let mut counts = [0usize; 2];
        for i in 0..scores.len() {
            if y[i] == lbl {
                sums[a[i] as usize] += scores[i];
                counts[a[i] as usize] += 1;
            }
        }
        for g in 0..2u8 {
            if counts[g as usize] == 0 {
                return Err(Error::DegenerateCell { group: g, label: lbl });
            }
        }
        let gap = sums[0] / counts[0] as f64 - sums[1] / counts[1] as f64;
        worst = worst.max(gap.abs());
    }
    Ok(worst)
}

pub fn accuracy(pred: &[u8], y: &[u8]) -> Result<f64> {
    check_lengths(&[pred.len(), y.len()])?;
    let hits = pred.iter().zip(y).filter(|(p, yi)| p == yi).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Mean of TPR and TNR; requires both labels present.
pub fn balanced_accuracy(pred: &[u8], y: &[u8]) -> Result<f64> {
    check_lengths(&[pred.len(), y.len()])?;
    require_labels(y)?;
    let mut correct = [0usize; 2];
    let mut total = [0usize; 2];
    for i in 0..pred.len() {
        total[y[i] as usize] += 1;
        if pred[i] == y[i] {
            correct[y[i] as usize] += 1;
        }
    }
    Ok(0.5 * (correct[0] as f64 / total[0] as f64 + correct[1] as f64 / total[1] as f64))
}

/// Plug-in mutual information in nats between binned scores and `a`.
///
/// Scores land in `bins` equal-width cells over [0, 1] (a score of exactly
/// 1 falls in the last cell); zero-count cells contribute nothing.
pub fn mutual_info(scores: &[f64], a: &[u8], bins: usize) -> MIEstimate {
    let n = scores.len();
    if n == 0 || bins == 0 {
        return MIEstimate { nats: 0.0, bins, n };
    }
    let mut joint = alloc::vec![0usize; bins * 2];
    let mut group = [0usize; 2];
    for i in 0..n {
        let mut b = (scores[i] * bins as f64) as usize;
        if b >= bins {
            b = bins - 1;
        }
        joint[b * 2 + a[i] as usize] += 1;
        group[a[i] as usize] += 1;
    }
    let nf = n as f64;
    let mut nats = 0.0;
    for b in 0..bins {
        let bin_total = joint[b * 2] + joint[b * 2 + 1];
        if bin_total == 0 {
            continue;
        }
        for g in 0..2 {
            let c = joint[b * 2 + g];
            if c == 0 || group[g] == 0 {
                continue;
            }
            let p_joint = c as f64 / nf;
            let p_bin = bin_total as f64 / nf;
            let p_group = group[g] as f64 / nf;
            nats += p_joint * libm::log(p_joint / (p_bin * p_group));
        }
    }
    MIEstimate { nats, bins, n }
}

/// Decisions at a threshold: positive iff `score >= t`.
pub fn apply_threshold(scores: &[f64], t: f64) -> Vec<u8> {
    scores.iter().map(|&s| u8::from(s >= t)).collect()
}
