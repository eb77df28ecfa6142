//! Core algorithms for fairness auditing and score post-processing.
//!
//! Everything in this crate is `no_std` + `alloc`: datasets live in plain
//! vectors, models are deterministic given a seed, and nothing here touches
//! the filesystem. The companion `fairpost` crate layers CSV ingestion, JSON
//! reports, and the command-line interface on top.
//!
//! The centrepiece is [`cafp`], which averages a model's score over both
//! values of a binary protected attribute and certifies the residual
//! score-level disparity from counterfactual bias magnitudes. [`baselines`]
//! provides equalized-odds decision flipping and reject-option relabeling
//! for comparison, [`metrics`] the group fairness measures, and [`harness`]
//! the repeated-split benchmark protocol tying it all together.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

pub mod baselines;
pub mod cafp;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod tree;

pub use dataset::Dataset;
pub use error::Error;
