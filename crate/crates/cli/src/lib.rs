//! Configuration-driven experiment runner for the `nllc` library.

pub mod config;
pub mod pipelines;
pub mod presets;

pub use config::{ConfigError, ExperimentConfig};
pub use pipelines::{run, Pipeline, RunError};
