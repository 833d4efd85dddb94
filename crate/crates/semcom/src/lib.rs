//! File formats, experiment harness and CLI plumbing around `semcom-core`.

pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod record;
pub mod synth;

pub use error::{HarnessError, Result};
