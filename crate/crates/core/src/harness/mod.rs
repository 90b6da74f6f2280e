//! Batch experiments driven by a JSON config: Monte-Carlo synchronization
//! runs, twisted-state counterexamples and certificate runs.

mod config;
mod experiments;
mod output;

use std::path::PathBuf;

pub use config::{
    CounterexampleConfig, ExperimentConfig, ManifoldSpec, Mode, OutputConfig, Overrides,
};
pub use experiments::{
    run_certification, run_counterexample, run_monte_carlo, CertificationReport,
    CounterexampleCase, CounterexampleReport, MonteCarloReport, MonteCarloSummary,
    NonConsensusTrial, PairMaximumSummary, TrialResult, LAGRANGE_TOL, MAX_F_TOL, Z_IDENTITY_TOL,
};
pub use output::{
    emit_results, format_float, write_json, write_trajectory_csv, write_trials_csv, OutputPaths,
    TRAJECTORY_HEADER, TRIALS_HEADER,
};

/// What a dispatched run produced.
#[derive(Debug)]
#[allow(clippy::large_enum_variant)]
pub enum RunOutcome {
    MonteCarlo(MonteCarloReport),
    Counterexample(CounterexampleReport),
    Certification(CertificationReport),
}

impl RunOutcome {
    /// A certificate that should hold (bound satisfied) failed.
    pub fn acceptance_failed(&self) -> bool {
        matches!(self, RunOutcome::Certification(r) if !r.passed)
    }
}

/// Runs the experiment selected by `cfg.mode` and writes its result files.
pub fn run(cfg: &ExperimentConfig) -> crate::Result<(RunOutcome, Vec<PathBuf>)> {
    let paths = OutputPaths::from_config(&cfg.output);
    match cfg.mode {
        Mode::MonteCarlo => {
            let report = run_monte_carlo(cfg)?;
            let files = emit_results(&report, &paths)?;
            Ok((RunOutcome::MonteCarlo(report), files))
        }
        Mode::Counterexample => {
            let report = run_counterexample(cfg)?;
            write_json(&paths.summary_json, &report)?;
            Ok((RunOutcome::Counterexample(report), vec![paths.summary_json]))
        }
        Mode::Certify | Mode::MaximizeF | Mode::IntegerPrograms => {
            let report = run_certification(cfg)?;
            write_json(&paths.summary_json, &report)?;
            Ok((RunOutcome::Certification(report), vec![paths.summary_json]))
        }
    }
}
