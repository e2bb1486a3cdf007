//! Experiment runner: configuration, run directories, CSV and SVG output.

pub mod config;
pub mod csv;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod matrix;
pub mod report;
pub mod runner;
pub mod svg;

pub use config::{ExperimentConfig, Kind};
pub use error::{LabError, Result};
pub use runner::{execute, execute_report};

/// Environment variable naming the default output root.
pub const OUT_ROOT_ENV: &str = "CRITFUSE_OUT_ROOT";
