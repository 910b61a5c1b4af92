//! Experiment sweeps: configuration, execution and CSV reports.

mod config;
mod experiment;
mod report;

pub use config::{ExperimentConfig, KernelChoice, Method};
pub use experiment::{evaluate_method, run_experiment, tv_distance, ExperimentSetup, ResultRecord};
pub use report::{
    emit_records_csv, emit_summary_csv, format_real, read_records_csv, summarize_mse, summarize_tv, SummaryRow,
    RECORD_HEADER, SUMMARY_HEADER,
};
