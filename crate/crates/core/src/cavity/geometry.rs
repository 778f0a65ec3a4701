use serde::{Deserialize, Serialize};

use super::FieldError;
use crate::constants::{BESSEL_J0_PRIME_ZERO, CS_CLOCK_FREQUENCY, SPEED_OF_LIGHT};

/// Cylindrical TE₀₁₁ clock cavity with below-cutoff entrance tubes on both
/// endcaps.
///
/// The cavity frame has its axis along `z`, with the lower endcap at `z = 0`
/// and the upper endcap at `z = height`. The cutoff tubes extend
/// `cutoff_tube_length` beyond each endcap with radius `endcap_hole_radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavityGeometry {
    /// Inner radius (m).
    pub radius: f64,
    /// Inner height, endcap to endcap (m).
    pub height: f64,
    /// Radius of the endcap holes and cutoff tubes (m).
    pub endcap_hole_radius: f64,
    /// Length of each cutoff tube (m).
    pub cutoff_tube_length: f64,
    /// Loaded quality factor.
    pub loaded_q: f64,
    /// Drive / clock frequency (Hz).
    pub clock_frequency: f64,
    /// Decay length of the standing wave inside the cutoff tubes (m). `None`
    /// selects the evanescent TE₀₁ decay length for the tube radius.
    pub cutoff_decay_length: Option<f64>,
}

impl Default for CavityGeometry {
    fn default() -> Self {
        Self {
            radius: 25.0e-3,
            height: 26.87e-3,
            endcap_hole_radius: 6.0e-3,
            cutoff_tube_length: 20.0e-3,
            loaded_q: 7000.0,
            clock_frequency: CS_CLOCK_FREQUENCY,
            cutoff_decay_length: None,
        }
    }
}

impl CavityGeometry {
    pub fn validate(&self) -> Result<(), FieldError> {
        let bad = |msg: String| Err(FieldError::InvalidGeometry(msg));
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad(format!("radius must be > 0, got {}", self.radius));
        }
        if !(self.height > 0.0 && self.height.is_finite()) {
            return bad(format!("height must be > 0, got {}", self.height));
        }
        if !(self.endcap_hole_radius > 0.0 && self.endcap_hole_radius < self.radius) {
            return bad(format!(
                "endcap_hole_radius must satisfy 0 < endcap_hole_radius < radius, got {} with radius {}",
                self.endcap_hole_radius, self.radius
            ));
        }
        if !(self.cutoff_tube_length >= 0.0 && self.cutoff_tube_length.is_finite()) {
            return bad(format!(
                "cutoff_tube_length must be >= 0, got {}",
                self.cutoff_tube_length
            ));
        }
        if !(self.loaded_q > 0.0 && self.loaded_q.is_finite()) {
            return bad(format!("loaded_q must be > 0, got {}", self.loaded_q));
        }
        if !(self.clock_frequency > 0.0 && self.clock_frequency.is_finite()) {
            return bad(format!(
                "clock_frequency must be > 0, got {}",
                self.clock_frequency
            ));
        }
        if let Some(l) = self.cutoff_decay_length {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("cutoff_decay_length must be > 0, got {l}"));
            }
        }
        Ok(())
    }

    /// Resonance fullwidth Γ = ω/Q (rad/s).
    pub fn fullwidth(&self) -> f64 {
        std::f64::consts::TAU * self.clock_frequency / self.loaded_q
    }

    /// Evanescent decay length of the TE₀₁ mode in a tube of the hole radius.
    ///
    /// Falls back to the cutoff wavenumber alone if the tube is not below
    /// cutoff.
    pub fn evanescent_decay_length(&self) -> f64 {
        let kc = BESSEL_J0_PRIME_ZERO / self.endcap_hole_radius;
        let k = std::f64::consts::TAU * self.clock_frequency / SPEED_OF_LIGHT;
        let alpha2 = kc * kc - k * k;
        if alpha2 > 0.0 {
            1.0 / alpha2.sqrt()
        } else {
            1.0 / kc
        }
    }

    pub fn decay_length(&self) -> f64 {
        self.cutoff_decay_length
            .unwrap_or_else(|| self.evanescent_decay_length())
    }

    /// Lowest `z` reached by the field region (bottom of the lower tube).
    pub fn z_min(&self) -> f64 {
        -self.cutoff_tube_length
    }

    /// Highest `z` reached by the field region (top of the upper tube).
    pub fn z_max(&self) -> f64 {
        self.height + self.cutoff_tube_length
    }

    pub fn midplane(&self) -> f64 {
        0.5 * self.height
    }

    /// Whether `(ρ, z)` lies in the cavity body or in one of the cutoff tubes.
    pub fn contains(&self, rho: f64, z: f64) -> bool {
        const SLACK: f64 = 1e-12;
        if !(rho >= 0.0) || !z.is_finite() {
            return false;
        }
        if (0.0..=self.height).contains(&z) {
            rho <= self.radius * (1.0 + SLACK)
        } else if z >= self.z_min() - SLACK && z <= self.z_max() + SLACK {
            rho <= self.endcap_hole_radius * (1.0 + SLACK)
        } else {
            false
        }
    }
}

/// Analytic TE₀₁₁ standing wave `J₀(χ′₀₁ ρ/R) sin(πz/d)`, normalized to 1 on
/// axis at the midplane.
///
/// Inside the cutoff tubes the longitudinal factor continues as
/// `(π/d)·s·exp(s/λ)`, with `s` the signed distance past the endcap, which
/// matches the value and slope of `sin(πz/d)` at the endcap and decays with
/// the tube decay length `λ`.
pub fn h0z_te011(geometry: &CavityGeometry, rho: f64, z: f64) -> Result<f64, FieldError> {
    if !geometry.contains(rho, z) {
        return Err(FieldError::OutOfDomain { rho, z });
    }
    Ok(h0z_unchecked(geometry, geometry.decay_length(), rho, z))
}

#[inline]
pub(crate) fn h0z_unchecked(geometry: &CavityGeometry, decay_length: f64, rho: f64, z: f64) -> f64 {
    radial_profile(geometry, rho) * longitudinal_profile(geometry, decay_length, z)
}

#[inline]
pub(crate) fn radial_profile(geometry: &CavityGeometry, rho: f64) -> f64 {
    libm::j0(BESSEL_J0_PRIME_ZERO * rho / geometry.radius)
}

#[inline]
pub(crate) fn longitudinal_profile(geometry: &CavityGeometry, decay_length: f64, z: f64) -> f64 {
    let d = geometry.height;
    let k = std::f64::consts::PI / d;
    if z < 0.0 {
        k * z * (z / decay_length).exp()
    } else if z > d {
        let s = d - z;
        k * s * (s / decay_length).exp()
    } else {
        (k * z).sin()
    }
}
