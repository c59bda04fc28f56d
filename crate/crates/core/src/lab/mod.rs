//! Experiment configuration, the registry of theorem-level checks, and report
//! emission.

pub mod config;
pub mod experiments;
pub mod lemma2;
pub mod report;

pub use config::{ExperimentConfig, ExperimentKind};
pub use experiments::run_experiment;
pub use lemma2::{lemma2_scan, lemma2_sequence, Lemma2Scan, Lemma2Value};
pub use report::{emit_report, ExperimentReport, ReportFormat, Verdict};
