use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::EstimationError;
use crate::cavity::{
    load_field_map, CavityField, CavityGeometry, FeedConfig, FieldMap, Grid, ParametricModel,
};
use crate::constants::{CS_MASS, STANDARD_GRAVITY};
use crate::dynamics::IntegratorSettings;

/// Largest tilt magnitude accepted by the small-angle fountain model (rad).
pub const MAX_TILT: f64 = 10e-3;

/// Launched atom cloud, in the cavity frame at launch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CloudModel {
    /// Mean launch position `(x, y, z)` (m); `z` is measured from the lower endcap.
    pub position_mean: [f64; 3],
    /// Gaussian rms size per axis (m).
    pub position_sigma: [f64; 3],
    /// Isotropic cloud temperature (K).
    pub temperature: f64,
    /// Launch speed along the fountain axis (m/s).
    pub launch_speed: f64,
    pub atom_mass: f64,
    pub gravity: f64,
}

impl Default for CloudModel {
    fn default() -> Self {
        Self {
            position_mean: [0.0, 0.0, -0.30],
            position_sigma: [1e-3, 1e-3, 1e-3],
            temperature: 1e-6,
            launch_speed: 3.88,
            atom_mass: CS_MASS,
            gravity: STANDARD_GRAVITY,
        }
    }
}

impl CloudModel {
    /// Thermal velocity spread per axis, `√(k_B T / m)`.
    pub fn velocity_sigma(&self) -> f64 {
        (crate::constants::BOLTZMANN * self.temperature / self.atom_mass).sqrt()
    }

    pub fn validate(&self, geometry: &CavityGeometry) -> Result<(), EstimationError> {
        let bad = |m: String| Err(EstimationError::InvalidConfig(m));
        if self.position_sigma.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return bad("cloud.position_sigma entries must be >= 0".into());
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return bad(format!("cloud.temperature must be >= 0, got {}", self.temperature));
        }
        if !(self.atom_mass > 0.0) || !(self.gravity > 0.0) {
            return bad("cloud.atom_mass and cloud.gravity must be > 0".into());
        }
        if self.position_mean.iter().any(|v| !v.is_finite()) {
            return bad("cloud.position_mean must be finite".into());
        }
        if self.position_mean[2] >= geometry.z_min() {
            return bad(format!(
                "cloud.position_mean z = {} must lie below the lower cutoff tube at {}",
                self.position_mean[2],
                geometry.z_min()
            ));
        }
        let apogee = self.position_mean[2] + self.launch_speed.powi(2) / (2.0 * self.gravity);
        if !(self.launch_speed > 0.0) || apogee <= geometry.z_max() {
            return bad(format!(
                "cloud.launch_speed {} reaches z = {apogee:.4} m, below the top of the upper cutoff tube at {}",
                self.launch_speed,
                geometry.z_max()
            ));
        }
        Ok(())
    }
}

/// Fountain tilt relative to true vertical (rad).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct TiltVector {
    /// Tilt toward the feed axis, the `φ = 0` direction.
    pub parallel: f64,
    /// Tilt toward `φ = π/2`.
    pub perpendicular: f64,
    /// Commanded tilt at which the fountain is actually vertical, parallel axis.
    pub offset_parallel: f64,
    /// Same, perpendicular axis.
    pub offset_perpendicular: f64,
}

impl TiltVector {
    pub fn new(parallel: f64, perpendicular: f64) -> Self {
        Self {
            parallel,
            perpendicular,
            ..Self::default()
        }
    }

    /// Physical tilt `(θ∥, θ⊥)` after removing the mechanical offset.
    pub fn effective(&self) -> (f64, f64) {
        (
            self.parallel - self.offset_parallel,
            self.perpendicular - self.offset_perpendicular,
        )
    }

    pub fn validate(&self) -> Result<(), EstimationError> {
        let (a, b) = self.effective();
        let mag = a.hypot(b);
        if !(mag <= MAX_TILT) {
            return Err(EstimationError::InvalidConfig(format!(
                "tilt magnitude {mag} rad exceeds the {MAX_TILT} rad model limit"
            )));
        }
        Ok(())
    }
}

/// Circular aperture centered on the cavity axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aperture {
    /// Height in the cavity frame (m).
    pub z: f64,
    pub radius: f64,
}

/// Apertures sorted by height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ApertureStack(pub Vec<Aperture>);

impl ApertureStack {
    /// Both ends of each cutoff tube.
    pub fn cutoff_tubes(geometry: &CavityGeometry) -> Self {
        let r = geometry.endcap_hole_radius;
        Self(
            [geometry.z_min(), 0.0, geometry.height, geometry.z_max()]
                .iter()
                .map(|&z| Aperture { z, radius: r })
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<(), EstimationError> {
        if self.0.iter().any(|a| !(a.radius > 0.0) || !a.z.is_finite()) {
            return Err(EstimationError::InvalidConfig(
                "aperture radii must be > 0 and heights finite".into(),
            ));
        }
        if self.0.windows(2).any(|w| w[1].z < w[0].z) {
            return Err(EstimationError::InvalidConfig(
                "apertures must be sorted by z".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionKind {
    Uniform,
    GaussianBeam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionProfile {
    pub kind: DetectionKind,
    /// 1/e² intensity radius of the detection beam (m).
    pub waist: f64,
    /// Azimuth along which the beam extends; efficiency falls off across it.
    pub beam_axis_azimuth: f64,
    /// Height of the detection plane, crossed on the way down (m).
    pub plane_z: f64,
}

impl Default for DetectionProfile {
    fn default() -> Self {
        Self {
            kind: DetectionKind::Uniform,
            waist: 9.9e-3,
            beam_axis_azimuth: FRAC_PI_2,
            plane_z: -0.15,
        }
    }
}

impl DetectionProfile {
    pub fn gaussian(waist: f64) -> Self {
        Self {
            kind: DetectionKind::GaussianBeam,
            waist,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EstimationError> {
        if self.kind == DetectionKind::GaussianBeam && !(self.waist > 0.0) {
            return Err(EstimationError::InvalidConfig(format!(
                "detection.waist must be > 0, got {}",
                self.waist
            )));
        }
        if !self.plane_z.is_finite() || !self.beam_axis_azimuth.is_finite() {
            return Err(EstimationError::InvalidConfig(
                "detection.plane_z and beam_axis_azimuth must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// How the pulse area that defines `b = 1` is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMeasure {
    /// Area-uniform average over the endcap hole.
    #[default]
    ApertureAverage,
    /// The on-axis traversal alone.
    OnAxis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveConfig {
    /// Microwave amplitude; `b = 1` is an average π/2 pulse.
    pub b: f64,
    pub normalization: NormalizationMeasure,
    /// Ramsey time defining `Δν = 1/(2T)`; defaults to the nominal
    /// trajectory's midplane-to-midplane time.
    pub ramsey_time: Option<f64>,
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self {
            b: 1.0,
            normalization: NormalizationMeasure::ApertureAverage,
            ramsey_time: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Full Ramsey integration at ±Δν/2 against a g = 0 baseline.
    #[default]
    FullIntegration,
    /// Per-traversal effective phases combined with the baseline fringe slope.
    EffectivePhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorConfig {
    pub method: Method,
    /// Sample trajectories in pairs mirrored through the cloud mean.
    pub antithetic: bool,
    /// Also evaluate every draw rotated by 90° about the launch axis, which
    /// cancels quadrupolar (`m = 2`) fluctuations within a unit. Needs equal
    /// x and y position spreads.
    pub rotation: bool,
    /// Contrast below which frequency conversion is refused.
    pub contrast_floor: f64,
    /// Flagged fraction above which a warning is logged.
    pub flagged_warning_fraction: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            method: Method::FullIntegration,
            antithetic: true,
            rotation: false,
            contrast_floor: crate::dynamics::DEFAULT_CONTRAST_FLOOR,
            flagged_warning_fraction: 0.01,
        }
    }
}

/// Where the perturbation fields come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum FieldSource {
    /// Standing wave only, `g ≡ 0`.
    None,
    Parametric(ParametricModel),
    File { path: PathBuf },
}

impl Default for FieldSource {
    fn default() -> Self {
        FieldSource::Parametric(ParametricModel::default())
    }
}

impl FieldSource {
    /// Build the field evaluator; `null_floor` is relative to the peak `H₀z`.
    pub fn build(
        &self,
        geometry: &CavityGeometry,
        null_floor: f64,
    ) -> Result<CavityField, EstimationError> {
        let map = match self {
            FieldSource::None => {
                FieldMap::empty(Grid::uniform(geometry.radius, 2, geometry.height, 2))
            }
            FieldSource::Parametric(model) => model.generate(geometry)?,
            FieldSource::File { path } => load_field_map(path)?,
        };
        Ok(CavityField::new(geometry.clone(), &map)?.with_null_floor(null_floor))
    }
}

/// Complete physical description of one fountain run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub geometry: CavityGeometry,
    pub field: FieldSource,
    pub feeds: FeedConfig,
    pub cloud: CloudModel,
    pub tilt: TiltVector,
    /// `None` places apertures at both ends of both cutoff tubes.
    pub apertures: Option<ApertureStack>,
    pub detection: DetectionProfile,
    pub drive: DriveConfig,
    pub integrator: IntegratorSettings,
    pub estimator: EstimatorConfig,
}

impl SimulationConfig {
    pub fn aperture_stack(&self) -> ApertureStack {
        self.apertures
            .clone()
            .unwrap_or_else(|| ApertureStack::cutoff_tubes(&self.geometry))
    }

    pub fn validate(&self) -> Result<(), EstimationError> {
        self.geometry.validate()?;
        if let FieldSource::Parametric(m) = &self.field {
            m.validate()?;
        }
        self.feeds.validate()?;
        self.cloud.validate(&self.geometry)?;
        self.tilt.validate()?;
        self.aperture_stack().validate()?;
        self.detection.validate()?;
        if !(self.drive.b > 0.0 && self.drive.b.is_finite()) {
            return Err(EstimationError::InvalidConfig(format!(
                "drive.b must be > 0, got {}",
                self.drive.b
            )));
        }
        if let Some(t) = self.drive.ramsey_time {
            if !(t > 0.0) {
                return Err(EstimationError::InvalidConfig(
                    "drive.ramsey_time must be > 0".into(),
                ));
            }
        }
        self.integrator.validate()?;
        if self.estimator.rotation
            && self.cloud.position_sigma[0] != self.cloud.position_sigma[1]
        {
            return Err(EstimationError::InvalidConfig(
                "estimator.rotation needs cloud.position_sigma[0] == position_sigma[1]".into(),
            ));
        }
        if !(self.estimator.contrast_floor >= 0.0) {
            return Err(EstimationError::InvalidConfig(
                "estimator.contrast_floor must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// A simulation configuration with its sampling controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub config: SimulationConfig,
    pub samples: usize,
    pub seed: u64,
}
