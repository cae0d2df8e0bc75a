//! Configuration, orchestration and reporting for search runs.

mod config;
mod report;
mod run;

pub use config::{ConfigError, EngineConfig, EvaluatorConfig, ProviderConfig, RunConfig, TransferConfig, CONFIG_SCHEMA};
pub use report::{
    gap_csv, gap_percent, gap_report, load_summaries, read_trajectory_csv, trajectory_rows, write_trajectory_csv, Baseline,
    GapRow, ReportError, TrajectoryRow,
};
pub use run::{
    run, Provenance, RunError, RunSummary, Seeds, EVENTS_FILE, SUMMARY_FILE, TRAJECTORY_FILE, TRANSCRIPT_FILE, VERSION,
};
