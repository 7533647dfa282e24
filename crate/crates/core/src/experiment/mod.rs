//! Experiment configuration, seeded instance generation and output files.

pub mod config;
pub mod generator;
pub mod runner;

pub use config::{parse_config, parse_config_str, ConfigFile, ExperimentConfig, ProbeSpec, ProblemSource};
pub use generator::{Generated, GeneratorSpec, QSpec};
pub use runner::{
    exit_code, inline_config, prepare, run_batch, run_experiment, run_probes, summarize, write_probe_report,
    write_trace_csv, Outcome, Prepared, ProbeEntry, Summary,
};
