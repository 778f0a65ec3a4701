//! Scripted studies built on the Monte Carlo engine: amplitude, tilt and
//! phase-imbalance sweeps, feed balancing and zero-tilt finding.
//!
//! A [`Scenario`] is a base run configuration plus a [`Study`] describing
//! which parameter to sweep and which observables to report. Sweep points
//! whose trajectories coincide are evaluated in a single pass with one feed
//! variant per point, so differences between them carry common random
//! numbers.

mod fit;
mod procedures;
mod scenario;
mod sweep;

pub use fit::{find_root, LinearFit, Point, PowerLawFit, Root, TanFit};
pub use procedures::{
    balance_feeds, find_zero_tilt, BalanceOptions, BalanceResult, ZeroTiltOptions,
    ZeroTiltResult, ROOT_TOLERANCE,
};
pub use scenario::{
    amplitude_grid, imbalanced_like, list_presets, only_feed, preset, Case, FitKind, FitSpec,
    Measurement, Scenario, Series, Study, SweepParameter, ALIASES, DEFAULT_SEED, PRESETS,
};
pub use sweep::{
    column_name, run_amplitude_sweep, run_phase_imbalance_scan, run_scenario, run_tilt_sweep,
    Cell, Column, FitParameter, FitReport, SweepMetadata, SweepResult,
};

use thiserror::Error;

use crate::montecarlo::EstimationError;
use crate::ErrorCategory;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExperimentError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
    #[error("fit failed: {reason}; points (x, y, σ): {points:?}")]
    FitFailed { reason: String, points: Vec<[f64; 3]> },
    #[error("no sign change over the bracket; scan (x, f): {scan:?}")]
    NoSignChange { scan: Vec<[f64; 2]> },
    #[error("{0}")]
    NonFinite(String),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
}

impl ExperimentError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            ExperimentError::InvalidScenario(_) | ExperimentError::UnknownScenario(_) => {
                ErrorCategory::Config
            }
            ExperimentError::Estimation(e) => e.category(),
            _ => ErrorCategory::Numerical,
        }
    }
}
