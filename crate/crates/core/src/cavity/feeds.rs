use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::FieldError;

/// One cavity feed.
///
/// Amplitudes are expressed relative to the standing wave the feeds jointly
/// excite: a physically normalized configuration has `Σ a_k e^{iψ_k} = 1`, so
/// that the microwave amplitude `b` alone sets the pulse area (see
/// [`FeedConfig::standing_wave_phasor`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Feed {
    /// Feed azimuth φ_k (rad); one of 0, π, ±π/2.
    pub azimuth: f64,
    /// Drive amplitude a_k ≥ 0.
    pub amplitude: f64,
    /// Drive phase ψ_k (rad).
    #[serde(default)]
    pub phase: f64,
    /// Relative coupling of this feed to the perturbation field `g`, e.g. from
    /// a feed-specific reflectivity. Scales only `g`, not the standing wave.
    #[serde(default = "one")]
    pub g_coupling: f64,
}

fn one() -> f64 {
    1.0
}

impl Feed {
    pub fn new(azimuth: f64, amplitude: f64, phase: f64) -> Self {
        Self {
            azimuth,
            amplitude,
            phase,
            g_coupling: 1.0,
        }
    }

    /// Complex feed weight `w_k = a_k e^{iψ_k}`.
    pub fn weight(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeedConfig {
    pub feeds: Vec<Feed>,
    /// Cavity detuning normalized to the resonance fullwidth, Δω/Γ.
    pub normalized_detuning: f64,
    /// Amplitude of the sine-parity `g₁` modelling inhomogeneous wall losses.
    pub wall_loss_sin_amplitude: f64,
}

impl Default for FeedConfig {
    fn default() -> Self {
        Self::balanced()
    }
}

const AZIMUTH_TOLERANCE: f64 = 1e-9;

impl FeedConfig {
    /// Normal clock operation: equal in-phase drive at φ = 0 and π.
    pub fn balanced() -> Self {
        Self {
            feeds: vec![Feed::new(0.0, 0.5, 0.0), Feed::new(PI, 0.5, 0.0)],
            normalized_detuning: 0.0,
            wall_loss_sin_amplitude: 0.0,
        }
    }

    /// A single feed at `azimuth` carrying the whole standing wave.
    pub fn single(azimuth: f64) -> Self {
        Self {
            feeds: vec![Feed::new(azimuth, 1.0, 0.0)],
            normalized_detuning: 0.0,
            wall_loss_sin_amplitude: 0.0,
        }
    }

    /// Two feeds at 0 and π with phase difference `Δψ = ψ₀ − ψ_π`, amplitudes
    /// scaled so the standing-wave phasor stays 1.
    pub fn phase_imbalanced(delta_psi: f64) -> Self {
        let a = 0.5 / (0.5 * delta_psi).cos();
        Self {
            feeds: vec![
                Feed::new(0.0, a, 0.5 * delta_psi),
                Feed::new(PI, a, -0.5 * delta_psi),
            ],
            normalized_detuning: 0.0,
            wall_loss_sin_amplitude: 0.0,
        }
    }

    /// Two in-phase feeds with amplitude ratio `a_π / a₀ = ratio`, normalized
    /// so that `a₀ + a_π = 1`.
    pub fn with_amplitude_ratio(ratio: f64) -> Self {
        let a0 = 1.0 / (1.0 + ratio);
        Self {
            feeds: vec![Feed::new(0.0, a0, 0.0), Feed::new(PI, ratio * a0, 0.0)],
            normalized_detuning: 0.0,
            wall_loss_sin_amplitude: 0.0,
        }
    }

    pub fn with_detuning(mut self, normalized_detuning: f64) -> Self {
        self.normalized_detuning = normalized_detuning;
        self
    }

    pub fn with_wall_loss(mut self, amplitude: f64) -> Self {
        self.wall_loss_sin_amplitude = amplitude;
        self
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        let bad = |msg: String| Err(FieldError::InvalidFeeds(msg));
        if self.feeds.is_empty() {
            return bad("at least one feed is required".into());
        }
        for (k, f) in self.feeds.iter().enumerate() {
            if !is_allowed_azimuth(f.azimuth) {
                return bad(format!(
                    "feed {k}: azimuth {} is not one of 0, π, ±π/2",
                    f.azimuth
                ));
            }
            if !(f.amplitude >= 0.0 && f.amplitude.is_finite()) {
                return bad(format!("feed {k}: amplitude must be >= 0, got {}", f.amplitude));
            }
            if !f.phase.is_finite() || !f.g_coupling.is_finite() {
                return bad(format!("feed {k}: phase and g_coupling must be finite"));
            }
        }
        if !self.feeds.iter().any(|f| f.amplitude > 0.0) {
            return bad("at least one feed must have amplitude > 0".into());
        }
        if !self.normalized_detuning.is_finite() || !self.wall_loss_sin_amplitude.is_finite() {
            return bad("normalized_detuning and wall_loss_sin_amplitude must be finite".into());
        }
        Ok(())
    }

    /// `Σ_k a_k e^{iψ_k}`: the standing-wave drive in units of the normalized
    /// `H₀`.
    pub fn standing_wave_phasor(&self) -> Complex64 {
        self.feeds.iter().map(Feed::weight).sum()
    }

    /// Phase difference ψ₀ − ψ_π of a two-feed configuration.
    pub fn delta_psi(&self) -> Option<f64> {
        let at = |phi: f64| {
            self.feeds
                .iter()
                .find(|f| angle_close(f.azimuth, phi))
                .map(|f| f.phase)
        };
        Some(at(0.0)? - at(PI)?)
    }

    /// Exchange the drives of the φ = 0 and φ = π feeds.
    pub fn swapped(&self) -> Self {
        let mut out = self.clone();
        for f in &mut out.feeds {
            if angle_close(f.azimuth, 0.0) {
                f.azimuth = PI;
            } else if angle_close(f.azimuth, PI) {
                f.azimuth = 0.0;
            }
        }
        out
    }

    /// Fold the feeds into per-harmonic coefficients, including the
    /// `(2Δω/Γ + i)` cavity response.
    pub fn weights(&self) -> FeedWeights {
        let response = Complex64::new(2.0 * self.normalized_detuning, 1.0);
        let mut cos_coef = [Complex64::new(0.0, 0.0); 3];
        let mut sin_coef = [Complex64::new(0.0, 0.0); 3];
        for f in &self.feeds {
            let w = f.weight() * f.g_coupling;
            for m in 0..3 {
                let mphi = m as f64 * f.azimuth;
                // cos(m(φ − φ_k)) = cos mφ cos mφ_k + sin mφ sin mφ_k
                cos_coef[m] += w * mphi.cos();
                sin_coef[m] += w * mphi.sin();
            }
        }
        for m in 0..3 {
            cos_coef[m] *= response;
            sin_coef[m] *= response;
        }
        FeedWeights {
            cos_coef,
            sin_coef,
            wall_loss: response * self.wall_loss_sin_amplitude,
        }
    }
}

/// Per-harmonic feed coefficients: the perturbation is
/// `Σ_m g_m (C_m cos mφ + S_m sin mφ) + W g_m^{sin} sin mφ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedWeights {
    pub cos_coef: [Complex64; 3],
    pub sin_coef: [Complex64; 3],
    pub wall_loss: Complex64,
}

impl FeedWeights {
    /// Weights with every coefficient zero: the unperturbed standing wave.
    pub fn none() -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self {
            cos_coef: [z; 3],
            sin_coef: [z; 3],
            wall_loss: z,
        }
    }
}

fn angle_close(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d < AZIMUTH_TOLERANCE || std::f64::consts::TAU - d < AZIMUTH_TOLERANCE
}

fn is_allowed_azimuth(phi: f64) -> bool {
    [0.0, PI, FRAC_PI_2, -FRAC_PI_2]
        .iter()
        .any(|&a| angle_close(phi, a))
}
