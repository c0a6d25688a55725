//! Experiment orchestration: configuration, replica-parallel execution and
//! output files.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{parse_config, parse_config_str, parse_config_with, write_config, ExperimentConfig, ExperimentKind, Overrides};
pub use experiments::{execute, CheckpointRecord, ExperimentOutcome, PoissonRecord, ReplicaRecord, RuleOutcome, SummaryRow};
pub use output::{records_jsonl, write_results};

use crate::error::{Error, Result};

/// Runs `config` and writes its outputs to `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let outcome = execute(config, None)?;
    write_results(&outcome, &config.output_dir)?;
    Ok(outcome)
}

/// Distribution of `Ŝ/S − 1` and `(Ŝ − S)/N^α` per checkpoint.
pub fn near_equivalence_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    if config.experiment != ExperimentKind::NearEquivalence {
        return Err(Error::InvalidArgument(format!(
            "expected a near-equivalence config, got {}",
            config.experiment
        )));
    }
    run_experiment(config)
}
