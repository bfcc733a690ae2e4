//! Experiment orchestration: configs, runs, reports and the subcommands of
//! the `bvae` binary.

mod commands;
mod config;
mod run;
pub mod svg;

pub use commands::{
    cmd_analyze, cmd_baseline, cmd_gen_data, cmd_reproduce, cmd_train, matrix_configs, run_experiment, run_name,
    train_into, Relation, ReproduceOptions, ReproduceSummary, RunOutcome, CHECKPOINT_FILE, DATA_FILE, MATRIX,
    SUMMARY_FILE, SUMMARY_HEADER, TRACE_FILE,
};
pub use config::{ExperimentConfig, ICA_COMPONENTS, PCA_COMPONENTS};
pub use run::{analyze_run, baseline_report, fit_baselines, BaselineReport, Baselines, RunReport};
