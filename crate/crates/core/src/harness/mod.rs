//! Persistence, configuration, and experiment orchestration.

mod bundle;
mod config;
mod report;
mod run;
mod runlog;
mod synthetic;

pub use bundle::{
    load_bundle, load_bundle_with_manifest, read_manifest, save_bundle, save_bundle_with_manifest, split_bundle,
    BundleManifest, DATA_FILE, MANIFEST_FILE,
};
pub use config::{Algorithm, LlmSettings, RunConfig};
pub use report::{cmd_report, summarize_log, LogSummary};
pub use run::{cmd_run, render_explanations, BestReport, RunSummary, SplitScore, BEST_FILE};
pub use runlog::{explanation_anchor, read_run_log, RunLogRecord, RunLogWriter, EXPLANATIONS_FILE, RUN_LOG_FILE};
pub use synthetic::generate_synthetic;
