//! Parallel experiment driver. Repeats are independent — each derives its
//! own seed — and aggregation sorts by repeat index, so the result is
//! identical to the sequential driver.

use fairpost_core::dataset::Dataset;
use fairpost_core::harness::{
    ExperimentConfig, FairnessReport, RunOutput, aggregate, run_single_repeat,
};
use rayon::prelude::*;

use crate::error::Result;

pub fn run_experiment_parallel(
    dataset: &Dataset,
    cfg: &ExperimentConfig,
) -> Result<FairnessReport> {
    cfg.validate()?;
    let outputs: Vec<fairpost_core::error::Result<RunOutput>> = (0..cfg.repeats)
        .into_par_iter()
        .map(|r| run_single_repeat(dataset, cfg, r))
        .collect();
    Ok(aggregate(cfg, outputs)?)
}
