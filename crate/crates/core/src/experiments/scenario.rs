//! Scenario descriptions and the built-in presets.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::cavity::{Feed, FeedConfig, ParametricModel};
use crate::montecarlo::{DetectionProfile, FieldSource, RunConfig, SimulationConfig};

/// A configuration knob a sweep can step through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Microwave amplitude `b`.
    B,
    /// Commanded tilt along the feed axis (rad).
    TiltParallel,
    /// Commanded tilt perpendicular to the feeds (rad).
    TiltPerpendicular,
    /// Feed phase imbalance `Δψ` (rad).
    DeltaPsi,
    /// Cavity detuning `Δω/Γ`.
    NormalizedDetuning,
    /// Mean launch position along x (m).
    CloudOffsetX,
    /// Mean launch position along y (m).
    CloudOffsetY,
    /// Gaussian detection beam waist (m).
    DetectionWaist,
}

impl SweepParameter {
    pub fn label(self) -> &'static str {
        match self {
            SweepParameter::B => "b",
            SweepParameter::TiltParallel => "tilt_parallel",
            SweepParameter::TiltPerpendicular => "tilt_perpendicular",
            SweepParameter::DeltaPsi => "delta_psi",
            SweepParameter::NormalizedDetuning => "detuning",
            SweepParameter::CloudOffsetX => "offset_x",
            SweepParameter::CloudOffsetY => "offset_y",
            SweepParameter::DetectionWaist => "waist",
        }
    }

    /// Write `value` into `config`.
    pub fn apply(self, config: &mut SimulationConfig, value: f64) -> Result<(), ExperimentError> {
        if !value.is_finite() {
            return Err(ExperimentError::InvalidScenario(format!(
                "{} value {value} is not finite",
                self.label()
            )));
        }
        match self {
            SweepParameter::B => config.drive.b = value,
            SweepParameter::TiltParallel => config.tilt.parallel = value,
            SweepParameter::TiltPerpendicular => config.tilt.perpendicular = value,
            SweepParameter::DeltaPsi => {
                if !(value.abs() < PI) {
                    return Err(ExperimentError::InvalidScenario(format!(
                        "delta_psi must lie in (-π, π), got {value}"
                    )));
                }
                config.feeds = imbalanced_like(&config.feeds, value);
            }
            SweepParameter::NormalizedDetuning => config.feeds.normalized_detuning = value,
            SweepParameter::CloudOffsetX => config.cloud.position_mean[0] = value,
            SweepParameter::CloudOffsetY => config.cloud.position_mean[1] = value,
            SweepParameter::DetectionWaist => {
                let mut det = DetectionProfile::gaussian(value);
                det.beam_axis_azimuth = config.detection.beam_axis_azimuth;
                det.plane_z = config.detection.plane_z;
                config.detection = det;
            }
        }
        Ok(())
    }
}

fn g_coupling_at(feeds: &FeedConfig, azimuth: f64) -> f64 {
    feeds
        .feeds
        .iter()
        .find(|f| ((f.azimuth - azimuth + PI).rem_euclid(2.0 * PI) - PI).abs() < 1e-9)
        .map_or(1.0, |f| f.g_coupling)
}

/// Only the feed at `azimuth` driven, keeping the cavity detuning, wall-loss
/// amplitude and that feed's `g` coupling.
pub fn only_feed(feeds: &FeedConfig, azimuth: f64) -> FeedConfig {
    let mut feed = Feed::new(azimuth, 1.0, 0.0);
    feed.g_coupling = g_coupling_at(feeds, azimuth);
    FeedConfig {
        feeds: vec![feed],
        normalized_detuning: feeds.normalized_detuning,
        wall_loss_sin_amplitude: feeds.wall_loss_sin_amplitude,
    }
}

/// Phase-imbalanced pair at 0 and π, keeping the other settings of `feeds`.
pub fn imbalanced_like(feeds: &FeedConfig, delta_psi: f64) -> FeedConfig {
    let mut out = FeedConfig::phase_imbalanced(delta_psi);
    out.feeds[0].g_coupling = g_coupling_at(feeds, 0.0);
    out.feeds[1].g_coupling = g_coupling_at(feeds, PI);
    out.normalized_detuning = feeds.normalized_detuning;
    out.wall_loss_sin_amplitude = feeds.wall_loss_sin_amplitude;
    out
}

/// Observables computed at every sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measurement {
    /// `δP` and `δν/ν` of the configured feeds (`delta_p`, `frac_shift`).
    Shift,
    /// Single-feed difference `ν₀ − ν_π` (`delta_p_0_minus_pi`,
    /// `nu0_minus_nupi`).
    FeedSwap,
    /// `(ν(Δψ) − (ν₀ + ν_π)/2) / (ν₀ − ν_π)` (`normalized_response`).
    PhaseImbalance,
    /// Fringe contrast and single-passage excitation (`contrast`,
    /// `rabi_up`, `rabi_down`).
    Contrast,
}

impl Measurement {
    pub fn observables(self) -> &'static [&'static str] {
        match self {
            Measurement::Shift => &["delta_p", "frac_shift"],
            Measurement::FeedSwap => &["delta_p_0_minus_pi", "nu0_minus_nupi"],
            Measurement::PhaseImbalance => &["normalized_response"],
            Measurement::Contrast => &["contrast", "rabi_up", "rabi_down"],
        }
    }
}

/// Variation of the base configuration evaluated side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Case {
    /// Column prefix; empty for none.
    pub label: String,
    /// Transverse launch offset `(x, y)` (m).
    pub cloud_offset: Option<[f64; 2]>,
    pub detection: Option<DetectionProfile>,
}

impl Case {
    pub fn apply(&self, config: &mut SimulationConfig) {
        if let Some([x, y]) = self.cloud_offset {
            config.cloud.position_mean[0] = x;
            config.cloud.position_mean[1] = y;
        }
        if let Some(det) = &self.detection {
            config.detection = det.clone();
        }
    }
}

/// Secondary parameter: each value produces its own set of columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Series {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// `y = a + b·x`, with zero crossing and linearity residual.
    Linear,
    /// `y = A tan(x/2)`.
    Tan,
    /// `|y| = c |x|^p`.
    PowerLaw,
}

/// Fit applied to every column of one observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    pub kind: FitKind,
    pub observable: String,
}

/// What to sweep and what to report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Study {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    #[serde(default)]
    pub series: Option<Series>,
    #[serde(default)]
    pub cases: Vec<Case>,
    pub measurements: Vec<Measurement>,
    #[serde(default)]
    pub fit: Option<FitSpec>,
    /// Series values `[hi, lo]`: adds `frac_shift(hi) − frac_shift(lo)`
    /// with correlated errors.
    #[serde(default)]
    pub differential: Option<[f64; 2]>,
}

impl Study {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidScenario(m));
        if self.values.is_empty() {
            return bad("sweep needs at least one value".into());
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return bad("sweep values must be finite".into());
        }
        if self.measurements.is_empty() {
            return bad("at least one measurement is required".into());
        }
        if let Some(s) = &self.series {
            if s.values.is_empty() || s.values.iter().any(|v| !v.is_finite()) {
                return bad("series values must be finite and non-empty".into());
            }
            if s.parameter == self.parameter {
                return bad("series and sweep parameters must differ".into());
            }
        }
        if let Some(fit) = &self.fit {
            let known = self
                .measurements
                .iter()
                .any(|m| m.observables().contains(&fit.observable.as_str()));
            if !known {
                return bad(format!("fit observable '{}' is not measured", fit.observable));
            }
        }
        if let Some([hi, lo]) = self.differential {
            let ok = self.series.as_ref().is_some_and(|s| {
                s.values.contains(&hi) && s.values.contains(&lo)
            }) && self.measurements.contains(&Measurement::Shift);
            if !ok {
                return bad("differential needs both values in the series and a shift measurement".into());
            }
        }
        let labels: Vec<&str> = self.cases.iter().map(|c| c.label.as_str()).collect();
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return bad(format!("duplicate case label '{l}'"));
            }
        }
        Ok(())
    }
}

/// A named, replayable experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub base: RunConfig,
    pub study: Study,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.study.validate()?;
        self.base.config.validate()?;
        if self.base.samples == 0 {
            return Err(ExperimentError::InvalidScenario("samples must be > 0".into()));
        }
        Ok(())
    }
}

/// Names of the built-in presets.
pub const PRESETS: [&str; 5] = ["fig1b", "fig1c", "fig2a", "fig2b_fig3", "fig2c"];

/// Alternative names accepted by [`preset`].
pub const ALIASES: [(&str, &str); 2] = [("fig3", "fig2b_fig3"), ("fig2b", "fig2b_fig3")];

/// Seed used by every preset.
pub const DEFAULT_SEED: u64 = 20_240_601;

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Microwave amplitudes 0.5, 1, …, 10.
pub fn amplitude_grid() -> Vec<f64> {
    (1..=20).map(|k| 0.5 * k as f64).collect()
}

fn parametric(model: ParametricModel) -> SimulationConfig {
    let mut cfg = SimulationConfig {
        field: FieldSource::Parametric(model),
        ..SimulationConfig::default()
    };
    cfg.integrator.max_area_per_step = 1e-2;
    cfg
}

fn run(config: SimulationConfig, samples: usize) -> RunConfig {
    RunConfig {
        config,
        samples,
        seed: DEFAULT_SEED,
    }
}

/// `m = 1` cosine field used by the tilt and phase-imbalance presets.
fn m1_config() -> SimulationConfig {
    parametric(ParametricModel {
        g1_amplitude: 5e-4,
        ..ParametricModel::default()
    })
}

fn fig1b() -> Scenario {
    Scenario {
        name: "fig1b".into(),
        description: "ν₀ − ν_π versus tilt along the feeds for 1, 3, 5 and 7 π/2 pulses".into(),
        base: run(m1_config(), 4000),
        study: Study {
            parameter: SweepParameter::TiltParallel,
            values: linspace(-1.6e-3, 1.6e-3, 9),
            series: Some(Series {
                parameter: SweepParameter::B,
                values: vec![1.0, 3.0, 5.0, 7.0],
            }),
            cases: Vec::new(),
            measurements: vec![Measurement::FeedSwap],
            fit: Some(FitSpec {
                kind: FitKind::Linear,
                observable: "nu0_minus_nupi".into(),
            }),
            differential: None,
        },
    }
}

fn fig1c() -> Scenario {
    let mut cfg = parametric(ParametricModel {
        g1_amplitude: 5e-4,
        wall_loss_profile: true,
        ..ParametricModel::default()
    });
    cfg.feeds = FeedConfig::balanced().with_wall_loss(2e-4);
    Scenario {
        name: "fig1c".into(),
        description: "5π/2 minus π/2 shift and ν₀ − ν_π versus tilt perpendicular to the feeds, \
                      with inhomogeneous wall losses"
            .into(),
        base: run(cfg, 4000),
        study: Study {
            parameter: SweepParameter::TiltPerpendicular,
            values: linspace(-1.6e-3, 1.6e-3, 5),
            series: Some(Series {
                parameter: SweepParameter::B,
                values: vec![1.0, 5.0],
            }),
            cases: Vec::new(),
            measurements: vec![Measurement::Shift, Measurement::FeedSwap],
            fit: Some(FitSpec {
                kind: FitKind::Linear,
                observable: "frac_shift".into(),
            }),
            differential: Some([5.0, 1.0]),
        },
    }
}

fn fig2a() -> Scenario {
    Scenario {
        name: "fig2a".into(),
        description: "m = 0 δP versus microwave amplitude for an expanding thermal cloud".into(),
        base: run(
            parametric(ParametricModel {
                g0_amplitude: 1e-4,
                ..ParametricModel::default()
            }),
            2000,
        ),
        study: Study {
            parameter: SweepParameter::B,
            values: amplitude_grid(),
            series: None,
            cases: Vec::new(),
            measurements: vec![Measurement::Shift, Measurement::Contrast],
            fit: None,
            differential: None,
        },
    }
}

/// Shared base of the `m = 1` amplitude and phase-imbalance studies: a
/// 1.6 mrad tilt along the feeds.
fn fig2b_fig3_base() -> RunConfig {
    let mut cfg = m1_config();
    cfg.tilt.parallel = 1.6e-3;
    run(cfg, 2000)
}

fn fig3() -> Scenario {
    Scenario {
        name: "fig2b_fig3".into(),
        description: "normalized shift versus feed phase imbalance at 1.6 mrad tilt, \
                      for three cavity detunings"
            .into(),
        base: fig2b_fig3_base(),
        study: Study {
            parameter: SweepParameter::DeltaPsi,
            values: linspace(-2.5, 2.5, 15),
            series: Some(Series {
                parameter: SweepParameter::NormalizedDetuning,
                values: vec![-0.25, 0.0, 0.25],
            }),
            cases: Vec::new(),
            measurements: vec![Measurement::PhaseImbalance],
            fit: Some(FitSpec {
                kind: FitKind::Tan,
                observable: "normalized_response".into(),
            }),
            differential: None,
        },
    }
}

fn fig2b() -> Scenario {
    Scenario {
        name: "fig2b".into(),
        description: "m = 1 ν₀ − ν_π versus microwave amplitude at 1.6 mrad tilt".into(),
        base: fig2b_fig3_base(),
        study: Study {
            parameter: SweepParameter::B,
            values: amplitude_grid(),
            series: None,
            cases: Vec::new(),
            measurements: vec![Measurement::FeedSwap],
            fit: None,
            differential: None,
        },
    }
}

fn fig2c() -> Scenario {
    let mut cfg = parametric(ParametricModel {
        g2_amplitude: 1e-3,
        ..ParametricModel::default()
    });
    cfg.estimator.rotation = true;
    Scenario {
        name: "fig2c".into(),
        description: "m = 2 δP versus microwave amplitude: Gaussian detection with a centred \
                      cloud, and a 2 mm launch offset with uniform detection"
            .into(),
        base: run(cfg, 4000),
        study: Study {
            parameter: SweepParameter::B,
            values: amplitude_grid(),
            series: None,
            cases: vec![
                Case {
                    label: "gaussian".into(),
                    cloud_offset: None,
                    detection: Some(DetectionProfile::gaussian(9.9e-3)),
                },
                Case {
                    label: "offset".into(),
                    cloud_offset: Some([2e-3, 0.0]),
                    detection: None,
                },
            ],
            measurements: vec![Measurement::Shift],
            fit: None,
            differential: None,
        },
    }
}

/// Resolve a preset or alias by name.
pub fn preset(name: &str) -> Result<Scenario, ExperimentError> {
    match name {
        "fig1b" => Ok(fig1b()),
        "fig1c" => Ok(fig1c()),
        "fig2a" => Ok(fig2a()),
        "fig2b_fig3" | "fig3" => Ok(fig3()),
        "fig2b" => Ok(fig2b()),
        "fig2c" => Ok(fig2c()),
        _ => Err(ExperimentError::UnknownScenario(name.to_string())),
    }
}

/// `(name, description)` of every preset, in listing order.
pub fn list_presets() -> Vec<(&'static str, String)> {
    PRESETS
        .iter()
        .map(|&n| (n, preset(n).expect("preset exists").description))
        .collect()
}
