//! Wall-clock overhead probe: counterfactual averaging queries the model
//! twice per instance, so its cost should sit near 2× plain scoring.

use std::hint::black_box;
use std::time::Instant;

use fairpost_core::cafp;
use fairpost_core::dataset::Dataset;
use fairpost_core::error::Error;
use fairpost_core::model::ProbClassifier;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LatencyReport {
    pub base_ms_per_100: f64,
    pub cafp_ms_per_100: f64,
    /// cafp / base; near 2 for models whose scoring dominates.
    pub ratio: f64,
    pub batch: usize,
    pub trials: usize,
}

fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        0.5 * (samples[n / 2 - 1] + samples[n / 2])
    }
}

/// Times `batch` factual scores against `batch` averaged scores: medians
/// over `trials` timed passes after 3 warm-ups each.
pub fn latency_probe<M: ProbClassifier>(
    model: &M,
    ds: &Dataset,
    batch: usize,
    trials: usize,
) -> Result<LatencyReport> {
    if ds.n() == 0 {
        return Err(Error::EmptyDataset.into());
    }
    if batch == 0 {
        return Err(Error::EmptyInput.into());
    }
    let trials = trials.max(20);

    let base_pass = || -> Result<f64> {
        let mut acc = 0.0;
        for k in 0..batch {
            let i = k % ds.n();
            acc += model.predict_proba(black_box(ds.row(i)), black_box(ds.a()[i]))?;
        }
        Ok(acc)
    };
    let cafp_pass = || -> Result<f64> {
        let mut acc = 0.0;
        for k in 0..batch {
            let i = k % ds.n();
            let t = cafp::cafp_score(model, black_box(ds.row(i)), Some(black_box(ds.a()[i])))?;
            acc += t.p_avg;
        }
        Ok(acc)
    };

    for _ in 0..3 {
        black_box(base_pass()?);
        black_box(cafp_pass()?);
    }
    let mut base_ms = Vec::with_capacity(trials);
    let mut cafp_ms = Vec::with_capacity(trials);
    for _ in 0..trials {
        let t0 = Instant::now();
        black_box(base_pass()?);
        base_ms.push(t0.elapsed().as_secs_f64() * 1e3);
        let t1 = Instant::now();
        black_box(cafp_pass()?);
        cafp_ms.push(t1.elapsed().as_secs_f64() * 1e3);
    }
    let per_100 = 100.0 / batch as f64;
    let base = median(&mut base_ms) * per_100;
    let cafp = median(&mut cafp_ms) * per_100;
    Ok(LatencyReport {
        base_ms_per_100: base,
        cafp_ms_per_100: cafp,
        ratio: cafp / base,
        batch,
        trials,
    })
}
