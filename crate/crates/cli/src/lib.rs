//! Orchestration behind the `fkm` binary: configuration, the verification
//! suites, and report emission.
//!
//! Exit codes: `0` every check passed (inconclusive checks do not fail),
//! `1` at least one check failed, `2` configuration or I/O error, `3`
//! numerical-integrity error.

pub mod config;
pub mod output;
pub mod suites;

use std::path::PathBuf;
use std::time::Instant;

use fkm_core::{Bound, Status, VerificationReport};
use thiserror::Error;

pub use config::{ConfigInput, Format, PairTag, RunConfig, Suite};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical integrity failure in {check}: {message}")]
    Integrity { check: String, message: String },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io { .. } => 2,
            RunError::Integrity { .. } => 3,
        }
    }
}

impl From<fkm_core::Error> for RunError {
    fn from(e: fkm_core::Error) -> Self {
        use fkm_core::Error as E;
        match e {
            E::NumericalIntegrity {
                check,
                discrepancy,
                tolerance,
            } => RunError::Integrity {
                check,
                message: format!("discrepancy {discrepancy:e} exceeds {tolerance:e}"),
            },
            E::Domain(_) | E::EmptyFamily { .. } => RunError::Config(e.to_string()),
            other => RunError::Integrity {
                check: "internal".into(),
                message: other.to_string(),
            },
        }
    }
}

pub struct RunOutcome {
    pub config: RunConfig,
    pub report: VerificationReport,
    pub wall_seconds: f64,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.count(Status::Fail) > 0 {
            1
        } else {
            0
        }
    }
}

/// Runs the configured suite on a pool of `config.workers` threads.
pub fn run_suite(config: &RunConfig) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| RunError::Config(format!("cannot start {} workers: {e}", config.workers)))?;
    let suites: Vec<Suite> = match config.suite {
        Suite::All => Suite::CONCRETE.to_vec(),
        s => vec![s],
    };
    let mut report = VerificationReport::new();
    for suite in suites {
        report.merge(&suites::run_concrete(suite, config, &pool)?);
    }
    apply_overrides(&mut report, config);
    Ok(RunOutcome {
        config: config.clone(),
        report,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Replaces thresholds of checks whose name is the override key or ends in
/// `/key`. Inconclusive outcomes stay inconclusive.
pub fn apply_overrides(report: &mut VerificationReport, config: &RunConfig) {
    for rec in &mut report.checks {
        let check = rec.name.rsplit('/').next().unwrap_or(&rec.name);
        let found = config.tol.get(&rec.name).or_else(|| config.tol.get(check));
        if let Some(&t) = found {
            rec.bound = match rec.bound {
                Bound::Below(_) => Bound::Below(t),
                Bound::Above(_) => Bound::Above(t),
            };
            if rec.status != Status::Inconclusive {
                rec.status = if rec.bound.accepts(rec.value) { Status::Pass } else { Status::Fail };
            }
        }
    }
}

/// Override keys that matched no check.
pub fn unused_overrides(report: &VerificationReport, config: &RunConfig) -> Vec<String> {
    config
        .tol
        .keys()
        .filter(|key| {
            !report
                .checks
                .iter()
                .any(|rec| rec.name == **key || rec.name.rsplit('/').next() == Some(key.as_str()))
        })
        .cloned()
        .collect()
}
