//! Experiment runner for the stochastic NLS laboratory: configuration
//! parsing, binary checkpoint records, CSV reports and the preset studies
//! behind the `snls-lab` binary.

pub mod config;
pub mod error;
pub mod format;
pub mod presets;
pub mod report;
pub mod runner;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{LabError, LabResult};
pub use presets::{run_experiment, RunOptions};
pub use report::Summary;
