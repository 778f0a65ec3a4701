//! Fountain Monte Carlo: trajectory sampling, tilt, apertures, detection
//! weighting and deterministic aggregation of Ramsey observables.
//!
//! Every estimator unit (an antithetic pair of trajectories by default) draws
//! from its own ChaCha8 stream keyed by `(seed, unit index)`, and unit results
//! are reduced pairwise in index order, so results are bit-identical for any
//! worker count.

mod config;
mod engine;
mod estimate;
mod normalization;
mod trajectory;

pub use config::{
    Aperture, ApertureStack, CloudModel, DetectionKind, DetectionProfile, DriveConfig,
    EstimatorConfig, FieldSource, Method, NormalizationMeasure, RunConfig, SimulationConfig,
    TiltVector, MAX_TILT,
};
pub use engine::{
    Engine, NominalTiming, PassSpec, Status, TrajectoryRecord, BASELINE_DETUNINGS,
};
pub use estimate::{
    pairwise_sum, ratio_combination, ratio_estimate, Counts, PassResult, RatioEstimate,
    ShiftEstimate, UnitSums,
};
pub use normalization::{rabi_scale, traversal_area};
pub use trajectory::{
    apply_apertures, detection_point, detection_weight, detection_weight_at, sample_trajectory,
    tilt_transform, tilted_gravity, CylindricalPoint, Trajectory,
};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cavity::FieldError;
use crate::dynamics::DynamicsError;
use crate::ErrorCategory;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EstimationError {
    #[error("no trajectory survived the apertures")]
    NoSurvivors,
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate estimate: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

impl EstimationError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            EstimationError::InvalidConfig(_) => ErrorCategory::Config,
            EstimationError::Field(FieldError::Io(_)) => ErrorCategory::Io,
            EstimationError::Field(FieldError::NearNull { .. }) => ErrorCategory::Numerical,
            EstimationError::Field(_) => ErrorCategory::Config,
            EstimationError::Dynamics(DynamicsError::InvalidInput(_)) => ErrorCategory::Config,
            _ => ErrorCategory::Numerical,
        }
    }
}

/// Hex SHA-256 of any serializable value's JSON form.
pub fn digest<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("configuration serializes");
    hex::encode(Sha256::digest(&json))
}

/// Worker count used when none is given: the available parallelism.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn warn_flagged(pass: &PassResult, limit: f64) {
    let c = pass.counts();
    if c.samples > 0 && c.flagged as f64 > limit * c.samples as f64 {
        log::warn!(
            "{} of {} trajectories flagged at field near-nulls",
            c.flagged,
            c.samples
        );
    }
}

/// DCP-induced `δP` for the configured feeds, against the `g = 0` baseline.
pub fn estimate_delta_p(run: &RunConfig) -> Result<ShiftEstimate, EstimationError> {
    let engine = Engine::new(&run.config)?;
    let spec = PassSpec {
        variants: vec![run.config.feeds.weights()],
        rabi: false,
    };
    let pass = engine.run(&spec, run.samples, run.seed, default_workers())?;
    warn_flagged(&pass, run.config.estimator.flagged_warning_fraction);
    let r = pass.delta_p_combination(&run.config.detection, &[(0, 1.0)])?;
    Ok(pass.shift_estimate(r, &digest(run)))
}

/// Ensemble contrast and single-passage excitation at one amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastRow {
    pub b: f64,
    pub contrast: f64,
    pub rabi_up: f64,
    pub rabi_down: f64,
}

/// Contrast and per-passage Rabi excitation versus `b`.
pub fn estimate_contrast_and_rabi(
    run: &RunConfig,
    b_list: &[f64],
) -> Result<Vec<ContrastRow>, EstimationError> {
    let spec = PassSpec {
        variants: Vec::new(),
        rabi: true,
    };
    b_list
        .iter()
        .map(|&b| {
            let mut cfg = run.config.clone();
            cfg.drive.b = b;
            let pass = Engine::new(&cfg)?.run(&spec, run.samples, run.seed, default_workers())?;
            warn_flagged(&pass, cfg.estimator.flagged_warning_fraction);
            let (rabi_up, rabi_down) = pass.rabi(&cfg.detection)?;
            Ok(ContrastRow {
                b,
                contrast: pass.contrast(&cfg.detection)?,
                rabi_up,
                rabi_down,
            })
        })
        .collect()
}
