//! Experiment harness around `entropy-lens-core`: dataset files, config
//! handling, model persistence, cross-validated evaluation runs, and report
//! serialization. The `entropy-lens` binary is a thin driver over these
//! modules.

pub mod config;
pub mod csvio;
pub mod experiment;
pub mod model_store;
pub mod report;

pub use config::ExperimentConfig;
pub use report::Report;
