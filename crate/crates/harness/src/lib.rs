//! Experiment harness for knowledge-weaving refinement: synthetic landscapes,
//! record-replay oracles, baselines, consistency statistics and metrics.

pub mod baselines;
pub mod cli;
pub mod config;
pub mod error;
pub mod metrics;
pub mod oracle;
pub mod stats;
pub mod synth;

pub use error::{HarnessError, Result};
