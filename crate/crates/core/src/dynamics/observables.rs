use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::integrator::{integrate_channels, propagate_pulse, Channel, IntegratorSettings};
use super::state::free_evolution;
use super::{DynamicsError, PulseDrive, TwoLevelState};

/// Contrast below which δP is not converted to a frequency shift.
pub const DEFAULT_CONTRAST_FLOOR: f64 = 0.05;

/// `|U_eg|` below which a traversal's effective phase is undefined.
pub const UNDEFINED_PHASE_FLOOR: f64 = 1e-6;

/// Time window of one cavity traversal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Traversal {
    pub t_start: f64,
    pub t_end: f64,
}

impl Traversal {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Excitation probability after up pulse, field-free flight and down pulse.
pub fn ramsey_probability<F>(
    up: Traversal,
    down: Traversal,
    field: F,
    drive: &PulseDrive,
    settings: &IntegratorSettings,
) -> Result<f64, DynamicsError>
where
    F: Fn(f64) -> Complex64,
{
    let gap = down.t_start - up.t_end;
    if gap < 0.0 {
        return Err(DynamicsError::InvalidInput(format!(
            "traversals overlap: up ends at {}, down starts at {}",
            up.t_end, down.t_start
        )));
    }
    let s = propagate_pulse(TwoLevelState::ground(), up.t_start, up.t_end, &field, drive, settings)?;
    let s = free_evolution(s, gap, drive.detuning);
    let s = propagate_pulse(s, down.t_start, down.t_end, &field, drive, settings)?;
    Ok(s.excited_probability())
}

/// Phase of a traversal's resonant coupling element relative to the
/// unperturbed traversal: `δΦ = arg(U_eg / U⁰_eg)` at δ = 0.
pub fn effective_traversal_phase<F, G>(
    traversal: Traversal,
    field: F,
    reference: G,
    amplitude: f64,
    settings: &IntegratorSettings,
) -> Result<f64, DynamicsError>
where
    F: Fn(f64) -> Complex64,
    G: Fn(f64) -> Complex64,
{
    let channels = [
        Channel {
            drive: 0,
            detuning: 0.0,
        },
        Channel {
            drive: 1,
            detuning: 0.0,
        },
    ];
    let mut states = [TwoLevelState::ground(); 2];
    integrate_channels(
        traversal.t_start,
        traversal.t_end,
        2,
        amplitude,
        |t, out: &mut [Complex64]| {
            out[0] = field(t);
            out[1] = reference(t);
        },
        &channels,
        &mut states,
        settings,
    )?;
    phase_relative(states[0].c_e, states[1].c_e)
}

/// `arg(u / u0)`, refusing near-zero reference elements.
pub(crate) fn phase_relative(u: Complex64, u0: Complex64) -> Result<f64, DynamicsError> {
    if u0.norm() < UNDEFINED_PHASE_FLOOR {
        return Err(DynamicsError::UndefinedPhase {
            magnitude: u0.norm(),
        });
    }
    Ok((u * u0.conj()).arg())
}

/// Peak-to-peak contrast of a sampled fringe.
pub fn fringe_contrast(probabilities: &[f64]) -> f64 {
    let (lo, hi) = probabilities
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
            (lo.min(p), hi.max(p))
        });
    let c = hi - lo;
    if !(c > 1e-15) {
        log::warn!("flat fringe: contrast reported as 0");
        return 0.0;
    }
    c
}

/// `δP = (δP⁺ − δP⁻)/2` from the DCP-induced changes at ±Δν/2.
pub fn delta_p(dp_plus: f64, dp_minus: f64) -> f64 {
    0.5 * (dp_plus - dp_minus)
}

/// Fractional frequency shift `δν/ν` with `δν = 2Δν·δP/(πC)`.
pub fn shift_from_delta_p(
    delta_p: f64,
    contrast: f64,
    linewidth: f64,
    clock_frequency: f64,
    contrast_floor: f64,
) -> Result<f64, DynamicsError> {
    if !(contrast >= contrast_floor) {
        return Err(DynamicsError::ContrastTooLow {
            contrast,
            floor: contrast_floor,
        });
    }
    Ok(2.0 * linewidth * delta_p / (std::f64::consts::PI * contrast) / clock_frequency)
}

/// Ramsey fullwidth `Δν = 1/(2T)`.
pub fn linewidth_from_ramsey_time(ramsey_time: f64) -> f64 {
    0.5 / ramsey_time
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseyObservables {
    pub probability: f64,
    pub contrast: f64,
    pub delta_p: f64,
    /// `None` when the contrast is below the conversion floor.
    pub fractional_shift: Option<f64>,
    pub linewidth: f64,
}

impl RamseyObservables {
    pub fn new(
        probability: f64,
        contrast: f64,
        delta_p: f64,
        linewidth: f64,
        clock_frequency: f64,
        contrast_floor: f64,
    ) -> Self {
        Self {
            probability,
            contrast,
            delta_p,
            fractional_shift: shift_from_delta_p(
                delta_p,
                contrast,
                linewidth,
                clock_frequency,
                contrast_floor,
            )
            .ok(),
            linewidth,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::CS_CLOCK_FREQUENCY;
    use std::f64::consts::PI;

    // Sine-profile pulse of area π/2 · b over [0, τ].
    fn sine_field(tau: f64, phase: impl Fn(f64) -> f64) -> impl Fn(f64) -> Complex64 {
        move |t: f64| {
            let a = (PI * t / tau).sin();
            Complex64::new(a, a * phase(t))
        }
    }

    fn sine_scale(tau: f64) -> f64 {
        // ∫ sin(πt/τ) dt = 2τ/π; area π/2 at b = 1
        PI / 2.0 / (2.0 * tau / PI)
    }

    #[test]
    fn conversion_examples() {
        let s = shift_from_delta_p(7e-8, 1.0, 0.822, CS_CLOCK_FREQUENCY, 0.05).unwrap();
        assert!((s - 4e-18).abs() < 0.05 * 4e-18, "{s}");
        assert_eq!(
            shift_from_delta_p(0.0, 1.0, 0.822, CS_CLOCK_FREQUENCY, 0.05).unwrap(),
            0.0
        );
        // inverse of the forward map
        let dp = 6.5e-15 * CS_CLOCK_FREQUENCY * PI / (2.0 * 0.822);
        assert!((dp - 1.14e-4).abs() < 0.005e-4, "{dp}");
        let back = shift_from_delta_p(dp, 1.0, 0.822, CS_CLOCK_FREQUENCY, 0.05).unwrap();
        assert!((back - 6.5e-15).abs() < 1e-27);
        assert!(matches!(
            shift_from_delta_p(1e-6, 0.01, 0.822, CS_CLOCK_FREQUENCY, 0.05),
            Err(DynamicsError::ContrastTooLow { .. })
        ));
    }

    #[test]
    fn ramsey_on_resonance_and_fringe_minimum() {
        let tau = 0.01;
        let up = Traversal {
            t_start: 0.0,
            t_end: tau,
        };
        let down = Traversal {
            t_start: 0.5,
            t_end: 0.5 + tau,
        };
        let field = sine_field(tau, |_| 0.0);
        let shifted = |t: f64| if t > 0.25 { field(t - 0.5) } else { field(t) };
        let s = IntegratorSettings::default();
        let mut drive = PulseDrive {
            b: 1.0,
            rabi_scale: sine_scale(tau),
            detuning: 0.0,
        };
        let p = ramsey_probability(up, down, shifted, &drive, &s).unwrap();
        assert!((p - 1.0).abs() < 1e-9, "{p}");
        // centre-to-centre time is 0.5 s
        drive.detuning = PI / 0.5;
        let p = ramsey_probability(up, down, shifted, &drive, &s).unwrap();
        assert!(p < 1e-3, "{p}");
    }

    #[test]
    fn uniform_phase_offset() {
        let tau = 0.01;
        let tr = Traversal {
            t_start: 0.0,
            t_end: tau,
        };
        for b in [0.5, 1.0, 1.5, 3.0, 5.0] {
            let amp = b * sine_scale(tau);
            let phi0 = 3e-3;
            let d = effective_traversal_phase(
                tr,
                sine_field(tau, |_| phi0),
                sine_field(tau, |_| 0.0),
                amp,
                &IntegratorSettings::default(),
            )
            .unwrap();
            assert!((d - phi0).abs() < 1e-10, "b={b}: {d}");
        }
    }

    #[test]
    fn undefined_phase_at_two_pi() {
        let tau = 0.01;
        let tr = Traversal {
            t_start: 0.0,
            t_end: tau,
        };
        let r = effective_traversal_phase(
            tr,
            sine_field(tau, |_| 1e-4),
            sine_field(tau, |_| 0.0),
            4.0 * sine_scale(tau),
            &IntegratorSettings::default(),
        );
        assert!(matches!(r, Err(DynamicsError::UndefinedPhase { .. })));
    }

    #[test]
    fn antiphase_fringes_average_to_zero_contrast() {
        let dts: Vec<f64> = (0..41).map(|k| -PI + k as f64 * PI / 20.0).collect();
        let avg: Vec<f64> = dts
            .iter()
            .map(|x| 0.5 * (0.5 * (1.0 + x.cos())) + 0.5 * (0.5 * (1.0 - x.cos())))
            .collect();
        assert!(fringe_contrast(&avg) < 1e-12);
        let ideal: Vec<f64> = dts.iter().map(|x| 0.5 * (1.0 + x.cos())).collect();
        assert!((fringe_contrast(&ideal) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn delta_p_definition() {
        assert_eq!(delta_p(3e-6, -1e-6), 2e-6);
        assert_eq!(linewidth_from_ramsey_time(0.5), 1.0);
    }
}
