//! File formats, dataset ingestion, and process-level plumbing around
//! [`fairpost_core`]: CSV loading driven by a JSON schema, model
//! serialization, report emission, latency probes, and a parallel
//! experiment driver.

#![deny(unsafe_code)]

pub mod error;
pub mod ingest;
pub mod latency;
pub mod model_io;
pub mod parallel;
pub mod report;
pub mod schema;

pub use error::{Error, Result};
