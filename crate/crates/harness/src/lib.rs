//! Experiment harness for `drpp-core`: dataset ingestion, synthetic
//! instances, TOML configs, seeded sweeps and CSV/JSONL artifacts.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod ingest;
pub mod instance;
pub mod synth;
pub mod validate;

pub use config::ExperimentConfig;
pub use experiment::{run_experiment, run_sweep, SweepResult};
