//! Experiment harness: configuration, single simulation points, resumable
//! power sweeps with CSV and SVG output, and the ESS codec file front end.

pub mod codec;
pub mod config;
pub mod error;
pub mod experiment;
pub mod plot;
pub mod sweep;

pub use config::{ExperimentConfig, Preset};
pub use error::{ConfigError, SimError};
pub use experiment::{audit_bits, Experiment, PointOutcome, SweepRecord};
pub use sweep::{run_sweep, SweepSummary};
