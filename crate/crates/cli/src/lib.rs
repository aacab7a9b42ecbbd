//! Experiment harness for the `mdl_relu` estimators.
//!
//! Each experiment is described by an [`ExperimentConfig`] (a JSON file,
//! optionally overridden on the command line) and writes CSV or JSON
//! artifacts that embed the full config and seed.

pub mod config;
pub mod error;
mod experiments;
pub mod output;

pub use config::{BasisChoice, Experiment, ExperimentConfig};
pub use error::CliError;
pub use experiments::RunSummary;

/// Validates `cfg` and runs its experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    let out = cfg.output_path()?;
    match cfg.experiment()? {
        Experiment::Spectrum => experiments::spectrum(cfg, &out),
        Experiment::CodeTable => experiments::code_table(cfg, &out),
        Experiment::Estimate => experiments::estimate(cfg, &out),
        Experiment::Redundancy => experiments::redundancy(cfg, &out),
        Experiment::RiskCurve => experiments::risk_curve(cfg, &out),
        Experiment::GramCheck => experiments::gram_check(cfg, &out),
    }
}
