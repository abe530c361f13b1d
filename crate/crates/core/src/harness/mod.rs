//! Experiment orchestration: instance sources, configuration, Monte-Carlo
//! sweeps with CSV/JSON output, and error-exponent estimation.

pub mod config;
pub mod exponent;
pub mod experiment;
pub mod instances;

pub use config::{AlgorithmConfig, AlgorithmKind, ExperimentConfig, InstanceSource};
pub use exponent::{estimate_error_exponent, fit_error_exponent, ExponentFit, ExponentOptions, ExponentPoint};
pub use experiment::{read_records, run_experiment, write_records, CheckpointStats, ExperimentSummary, RunRecord};
pub use instances::{
    generate_eoo_instance, generate_random_instance, load_dataset_instance, truth_sidecar_path, DatasetOptions,
    DatasetTruth,
};
