//! Experiment orchestration: the short-term, long-term, few-shot and
//! zero-shot protocols over a set of plants, with CSV reports, summaries and
//! forecast traces.

mod config;
mod report;
mod run;

pub use config::{
    DataConfig, ExperimentConfig, ModelKind, ModelSettings, Protocol, SourceKind, WindowConfig, DEFAULT_FRACTIONS,
    DEFAULT_SEEDS, LONG_INPUT_LEN,
};
pub use report::{load_report, read_report, sort_rows, summarize, write_csv, write_report, Flag, ReportRow, SummaryRow};
pub use run::{fit_model, load_plants, run_experiment, select_plants, CaseLog, ExperimentOutput, FittedModel};
