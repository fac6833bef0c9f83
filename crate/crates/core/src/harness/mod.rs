//! Experiment grid: scratch training, zero-shot transfer, fine-tuning and
//! classical baselines across sizes and seeds, persisted in a resumable
//! results store, plus the bound overlay computed from those results.
//!
//! A store directory holds
//!
//! * `results.csv`, one [`RunResult`] per line, sorted by `run_id`;
//! * `manifest.json`, wallclock per run, recorded failures and the configs
//!   that have written to the store;
//! * `checkpoints/<run_id>.json`, trained parameters;
//! * `telemetry/<run_id>.csv`, per-episode training records;
//! * `bounds.csv`, written by [`run_bound_overlay`].

mod config;
mod grid;
mod overlay;
mod store;

pub use config::{BoundConfig, ExperimentConfig};
pub use grid::{enumerate_jobs, run_grid, GridOutcome, Job, WORKERS_ENV};
pub use overlay::{
    overlay_rows, read_bounds, run_bound_overlay, write_bounds, BoundMode, BoundRow, OverlayInputs,
    SourceEstimate,
};
pub use store::{fmt_g, read_results, read_telemetry, write_results, CellFailure, Manifest, ResultStore};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::AnsatzKind;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Scratch,
    ZeroShot,
    Finetune,
    BaselineChristofides,
    BaselineNn,
    BaselineOptimal,
}

impl RunMode {
    pub const ALL: [RunMode; 6] = [
        RunMode::Scratch,
        RunMode::ZeroShot,
        RunMode::Finetune,
        RunMode::BaselineChristofides,
        RunMode::BaselineNn,
        RunMode::BaselineOptimal,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RunMode::Scratch => "scratch",
            RunMode::ZeroShot => "zero_shot",
            RunMode::Finetune => "finetune",
            RunMode::BaselineChristofides => "baseline_christofides",
            RunMode::BaselineNn => "baseline_nn",
            RunMode::BaselineOptimal => "baseline_optimal",
        }
    }

    pub fn is_baseline(&self) -> bool {
        matches!(
            self,
            RunMode::BaselineChristofides | RunMode::BaselineNn | RunMode::BaselineOptimal
        )
    }

    /// Solver column value for baseline rows.
    pub fn baseline_solver(&self) -> Option<&'static str> {
        match self {
            RunMode::BaselineChristofides => Some("christofides"),
            RunMode::BaselineNn => Some("nn"),
            RunMode::BaselineOptimal => Some("optimal"),
            _ => None,
        }
    }
}

impl std::str::FromStr for RunMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        RunMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown run mode {s:?}")))
    }
}

impl std::fmt::Display for RunMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One aggregated evaluation: a solver on the evaluation set of one
/// `(m_target, seed)` cell.
///
/// Baseline rows carry `n_source = 0`; scratch rows have
/// `n_source == m_target`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run_id: String,
    pub mode: RunMode,
    /// `eqc`, `effsu2`, or the baseline name.
    pub solver: String,
    pub n_source: usize,
    pub m_target: usize,
    pub seed: u64,
    pub mean_tour_length: f64,
    pub std_tour_length: f64,
    pub mean_normalized_perf: f64,
    /// Not part of `results.csv`; kept in the manifest so the CSV is
    /// reproducible byte for byte.
    #[serde(skip)]
    pub wallclock_seconds: f64,
}

impl RunResult {
    pub fn kind(&self) -> Option<AnsatzKind> {
        self.solver.parse().ok().filter(|_| !self.mode.is_baseline())
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mean_normalized_perf) {
            return Err(Error::InvalidArgument(format!(
                "run {}: normalized performance {} outside [0, 1]",
                self.run_id, self.mean_normalized_perf
            )));
        }
        if !(self.mean_tour_length.is_finite() && self.std_tour_length >= 0.0) {
            return Err(Error::InvalidArgument(format!("run {}: bad tour statistics", self.run_id)));
        }
        Ok(())
    }
}

/// First 16 hex digits of the SHA-256 of `|`-joined parts.
pub fn content_id(parts: &[&str]) -> String {
    let digest = Sha256::digest(parts.join("|").as_bytes());
    hex::encode(&digest[..8])
}

/// Mean and sample standard deviation.
pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_names_roundtrip() {
        for m in RunMode::ALL {
            assert_eq!(m.as_str().parse::<RunMode>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.as_str()));
        }
        assert!("warm".parse::<RunMode>().is_err());
    }

    #[test]
    fn content_ids_are_stable() {
        let a = content_id(&["scratch", "eqc", "4"]);
        assert_eq!(a.len(), 16);
        assert_eq!(a, content_id(&["scratch", "eqc", "4"]));
        assert_ne!(a, content_id(&["scratch", "eqc", "5"]));
        // the separator keeps "ab|c" and "a|bc" apart
        assert_ne!(content_id(&["ab", "c"]), content_id(&["a", "bc"]));
    }

    #[test]
    fn sample_statistics() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
    }
}
