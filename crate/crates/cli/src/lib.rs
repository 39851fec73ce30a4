//! Command-line harness around `salient-core`: configuration, dataset
//! layout, per-frame artifacts with provenance, benchmark reports and a
//! synthetic fixture generator.

pub mod config;
pub mod dataset;
pub mod fixtures;
pub mod run;

pub use config::{Config, DEFAULT_CONFIG};
pub use dataset::Dataset;
pub use fixtures::make_fixtures;
pub use run::{evaluate_predictions, map_digest, run_dataset, run_frame, DatasetRun, FrameResult, Provenance, RunOptions};
