//! Counterfactual score averaging (CAFP), per-instance bias diagnostics,
//! and the equalized-odds bound certificate.
//!
//! The post-processor queries the model twice per instance — once with
//! each protected value — and replaces the factual score with the mean.
//! The averaged score is therefore invariant to the observed group, and
//! the pointwise cost of the swap is exactly half the counterfactual bias.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::ProbClassifier;

/// Factual, counterfactual, and averaged scores for one instance.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScoreTriple {
    pub p_factual: f64,
    pub p_counterfactual: f64,
    pub p_avg: f64,
    /// Signed counterfactual bias, `p_factual − p_counterfactual`.
    pub cb: f64,
}

/// Certified upper bound on the score-level EOD of the averaged scorer,
/// valid when the features carry no group signal beyond the label.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EOBoundCertificate {
    /// Half the mean |cb| over label-0 rows.
    pub b0: f64,
    /// Half the mean |cb| over label-1 rows.
    pub b1: f64,
    pub bound: f64,
    pub n0: usize,
    pub n1: usize,
}

/// Scores one instance under both protected values.
///
/// `p_avg` is computed from the (a=0, a=1) pair directly, so it does not
/// depend on `a_observed`; the observed value only orients `p_factual`
/// and the sign of `cb`. When absent, the (factual, counterfactual)
/// slots map to (a=0, a=1) by convention.
pub fn cafp_score<M: ProbClassifier>(
    model: &M,
    x: &[f64],
    a_observed: Option<u8>,
) -> Result<ScoreTriple> {
    if let Some(a) = a_observed {
        if a > 1 {
            return Err(Error::InvalidConfig(String::from("a_observed must be 0 or 1")));
        }
    }
    let p0 = model.predict_proba(x, 0)?;
    let p1 = model.predict_proba(x, 1)?;
    let p_avg = 0.5 * (p0 + p1);
    let (p_factual, p_counterfactual) = match a_observed {
        Some(1) => (p1, p0),
        _ => (p0, p1),
    };
    let cb = p_factual - p_counterfactual;
    debug_assert!(((p_factual - p_avg).abs() - 0.5 * cb.abs()).abs() < 1e-12);
    Ok(ScoreTriple { p_factual, p_counterfactual, p_avg, cb })
}

/// Scores every row in order; a model failure reports the offending row.
pub fn cafp_batch<M: ProbClassifier>(model: &M, ds: &Dataset) -> Result<Vec<ScoreTriple>> {
    let mut out = Vec::with_capacity(ds.n());
    for i in 0..ds.n() {
        let triple = cafp_score(model, ds.row(i), Some(ds.a()[i]))
            .map_err(|e| Error::RowError { row: i, inner: Box::new(e) })?;
        out.push(triple);
    }
    Ok(out)
}

/// Per-label certificate: `B_y = ½ · mean{|cb_i| : y_i = y}`,
/// `bound = max(B_0, B_1)`.
pub fn eo_bound_certificate<M: ProbClassifier>(
    model: &M,
    ds: &Dataset,
) -> Result<EOBoundCertificate> {
    let triples = cafp_batch(model, ds)?;
    certificate_from_triples(&triples, ds.y())
}

/// Certificate from already-computed score triples, so callers that
/// batch-score once do not query the model a second time.
pub fn certificate_from_triples(
    triples: &[ScoreTriple],
    y: &[u8],
) -> Result<EOBoundCertificate> {
    if y.len() != triples.len() {
        return Err(Error::ShapeMismatch { expected: triples.len(), got: y.len() });
    }
    let mut sums = [0.0f64; 2];
    let mut counts = [0usize; 2];
    for (t, &yi) in triples.iter().zip(y) {
        sums[yi as usize] += t.cb.abs();
        counts[yi as usize] += 1;
    }
    for lbl in 0..2u8 {
        if counts[lbl as usize] == 0 {
            return Err(Error::MissingLabel(lbl));
        }
    }
    let b0 = 0.5 * sums[0] / counts[0] as f64;
    let b1 = 0.5 * sums[1] / counts[1] as f64;
    Ok(EOBoundCertificate { b0, b1, bound: b0.max(b1), n0: counts[0], n1: counts[1] })
}

/// Mean pointwise distortion `|p_factual − p_avg|`; equals half the mean
/// |cb| up to floating error.
pub fn mean_distortion(triples: &[ScoreTriple]) -> Result<f64> {
    if triples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let total: f64 = triples.iter().map(|t| (t.p_factual - t.p_avg).abs()).sum();
    Ok(total / triples.len() as f64)
}
