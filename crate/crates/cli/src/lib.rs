//! Experiment harness on top of `insitu_core`: configuration files, replicate
//! orchestration, CSV/JSON results, rank-test comparison and SVG boxplots.

pub mod compare;
pub mod config;
pub mod experiment;
pub mod plot;

pub use compare::{compare, load_metric, CompareReport, Metric};
pub use config::{load_config, Algorithm, EvaluatorConfig, ExperimentConfig};
pub use experiment::{
    read_trace, run_experiment, ExperimentSummary, ReplicateSummary, ResultFiles, RunControl,
    TraceRow, TRACE_HEADER,
};
pub use plot::{emit_boxplot_svg, render_boxplot_svg};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    /// Result files that are missing, unreadable or lack a metric.
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// 1 for anything the user can fix by changing arguments or files, 2 for
    /// failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Input(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}
