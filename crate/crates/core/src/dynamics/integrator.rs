use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{DynamicsError, PulseDrive, TwoLevelState};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Step control for the fourth-order Runge–Kutta integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSettings {
    /// Largest pulse-area (or detuning-phase) increment per step, rad.
    pub max_area_per_step: f64,
    /// Minimum number of steps per segment; caps the step where the field is weak.
    pub min_steps_per_segment: u32,
    /// Steps shorter than this are reported as underflow, s.
    pub min_step: f64,
    /// `|Re H_z|` floor below which the field phase is undefined, in units of
    /// the peak standing-wave amplitude.
    pub null_floor: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            max_area_per_step: 1e-3,
            min_steps_per_segment: 400,
            min_step: 1e-12,
            null_floor: 1e-6,
        }
    }
}

impl IntegratorSettings {
    /// Same settings with every step limit halved.
    pub fn refined(&self) -> Self {
        Self {
            max_area_per_step: 0.5 * self.max_area_per_step,
            min_steps_per_segment: 2 * self.min_steps_per_segment,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.max_area_per_step > 0.0 && self.max_area_per_step <= 0.5) {
            return Err(DynamicsError::InvalidInput(format!(
                "max_area_per_step must be in (0, 0.5], got {}",
                self.max_area_per_step
            )));
        }
        if self.min_steps_per_segment == 0 {
            return Err(DynamicsError::InvalidInput(
                "min_steps_per_segment must be positive".into(),
            ));
        }
        if !(self.min_step > 0.0) || !(self.null_floor >= 0.0) {
            return Err(DynamicsError::InvalidInput(
                "min_step must be positive and null_floor non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// One integrated state: which drive field it sees and at which detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub drive: usize,
    pub detuning: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub steps: u64,
}

/// Half-Rabi coupling `κ = (Ω/2) e^{iΦ}` for normalized field `h`.
#[inline]
pub fn coupling(h: Complex64, amplitude: f64, null_floor: f64) -> Option<Complex64> {
    let half = 0.5 * amplitude * h.re;
    if h.re.abs() <= null_floor {
        if h.im.abs() <= null_floor {
            return Some(Complex64::new(half, 0.0));
        }
        return None;
    }
    let (s, c) = sin_cos_small(h.im / h.re);
    Some(Complex64::new(half * c, half * s))
}

// Φ is tiny almost everywhere; the series is exact to rounding for |Φ| < 1e-2.
#[inline]
fn sin_cos_small(x: f64) -> (f64, f64) {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        let s = x * (1.0 - x2 / 6.0 * (1.0 - x2 / 20.0));
        let c = 1.0 - 0.5 * x2 * (1.0 - x2 / 12.0 * (1.0 - x2 / 30.0));
        (s, c)
    } else {
        x.sin_cos()
    }
}

#[inline]
fn deriv(k: Complex64, detuning: f64, g: Complex64, e: Complex64) -> (Complex64, Complex64) {
    // ċ_g = −i κ* c_e,  ċ_e = i δ c_e − i κ c_g
    let dg = k.conj() * e;
    let de = k * g;
    (
        Complex64::new(dg.im, -dg.re),
        Complex64::new(-detuning * e.im + de.im, detuning * e.re - de.re),
    )
}

/// Integrate many states through one segment `[t0, t1]` with shared steps.
///
/// `field(t, out)` writes the normalized `H_z` seen by each drive index at
/// time `t`; `amplitude` is `b · rabi_scale`. Every channel advances with the
/// same step sequence, so differences between channels carry no step noise.
pub fn integrate_channels<F>(
    t0: f64,
    t1: f64,
    n_drives: usize,
    amplitude: f64,
    mut field: F,
    channels: &[Channel],
    states: &mut [TwoLevelState],
    settings: &IntegratorSettings,
) -> Result<IntegrationStats, DynamicsError>
where
    F: FnMut(f64, &mut [Complex64]),
{
    assert_eq!(channels.len(), states.len());
    let duration = t1 - t0;
    if !(duration >= 0.0) {
        return Err(DynamicsError::InvalidInput(format!(
            "segment end {t1} precedes start {t0}"
        )));
    }
    if duration == 0.0 || channels.is_empty() {
        return Ok(IntegrationStats::default());
    }
    let h_max = duration / settings.min_steps_per_segment as f64;
    let max_detuning = channels
        .iter()
        .fold(0.0_f64, |m, c| m.max(c.detuning.abs()));

    let mut hbuf = vec![ZERO; n_drives];
    let mut ka = vec![ZERO; n_drives];
    let mut km = vec![ZERO; n_drives];
    let mut kb = vec![ZERO; n_drives];

    let mut eval = |t: f64, k: &mut [Complex64], hbuf: &mut [Complex64]| {
        field(t, hbuf);
        for (kd, &h) in k.iter_mut().zip(hbuf.iter()) {
            *kd = coupling(h, amplitude, settings.null_floor).ok_or(DynamicsError::NearNull {
                t,
                re: h.re,
                im: h.im,
            })?;
        }
        Ok::<(), DynamicsError>(())
    };

    eval(t0, &mut ka, &mut hbuf)?;
    let mut t = t0;
    let mut steps = 0u64;
    loop {
        let rate = ka
            .iter()
            .fold(max_detuning, |m, k| m.max(2.0 * k.norm()));
        let mut h = if rate > 0.0 {
            h_max.min(settings.max_area_per_step / rate)
        } else {
            h_max
        };
        let last = t + h >= t1 - 1e-9 * h;
        if last {
            h = t1 - t;
        } else if h < settings.min_step {
            return Err(DynamicsError::StepUnderflow {
                t,
                step: h,
                min_step: settings.min_step,
                rate,
            });
        }
        eval(t + 0.5 * h, &mut km, &mut hbuf)?;
        eval(if last { t1 } else { t + h }, &mut kb, &mut hbuf)?;

        let h2 = 0.5 * h;
        let h6 = h / 6.0;
        for (ch, s) in channels.iter().zip(states.iter_mut()) {
            let (a, m, b) = (ka[ch.drive], km[ch.drive], kb[ch.drive]);
            let d = ch.detuning;
            let (g, e) = (s.c_g, s.c_e);
            let (g1, e1) = deriv(a, d, g, e);
            let (g2, e2) = deriv(m, d, g + g1 * h2, e + e1 * h2);
            let (g3, e3) = deriv(m, d, g + g2 * h2, e + e2 * h2);
            let (g4, e4) = deriv(b, d, g + g3 * h, e + e3 * h);
            s.c_g = g + (g1 + (g2 + g3) * 2.0 + g4) * h6;
            s.c_e = e + (e1 + (e2 + e3) * 2.0 + e4) * h6;
        }
        steps += 1;
        if last {
            break;
        }
        t += h;
        std::mem::swap(&mut ka, &mut kb);
    }
    Ok(IntegrationStats { steps })
}

/// Propagate one state through a pulse whose normalized field along the
/// traversal is `field(t)`.
pub fn propagate_pulse<F>(
    state: TwoLevelState,
    t0: f64,
    t1: f64,
    field: F,
    drive: &PulseDrive,
    settings: &IntegratorSettings,
) -> Result<TwoLevelState, DynamicsError>
where
    F: Fn(f64) -> Complex64,
{
    let mut states = [state];
    integrate_channels(
        t0,
        t1,
        1,
        drive.amplitude(),
        |t, out: &mut [Complex64]| out[0] = field(t),
        &[Channel {
            drive: 0,
            detuning: drive.detuning,
        }],
        &mut states,
        settings,
    )?;
    Ok(states[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn constant(omega: f64, detuning: f64, tau: f64, phase: f64) -> TwoLevelState {
        let drive = PulseDrive {
            b: 1.0,
            rabi_scale: omega,
            detuning,
        };
        let h = Complex64::new(1.0, phase);
        propagate_pulse(
            TwoLevelState::ground(),
            0.0,
            tau,
            |_| h,
            &drive,
            &IntegratorSettings::default(),
        )
        .unwrap()
    }

    #[test]
    fn rabi_half_and_full() {
        let omega = 100.0;
        let p = constant(omega, 0.0, PI / 2.0 / omega, 0.0).excited_probability();
        assert!((p - 0.5).abs() < 1e-10);
        let p = constant(omega, 0.0, PI / omega, 0.0).excited_probability();
        assert!((p - 1.0).abs() < 1e-10);
    }

    #[test]
    fn generalized_rabi() {
        let omega = 50.0;
        let s = constant(omega, omega, PI / omega, 0.0);
        // (Ω²/Ω_eff²) sin²(Ω_eff τ/2) with Ω_eff = √2 Ω, τ = π/Ω
        let expected = (2f64.sqrt() * PI / 2.0).sin().powi(2) / 2.0;
        assert!((s.excited_probability() - expected).abs() < 1e-10);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn phase_rotates_coupling_element() {
        let omega = 80.0;
        let a = constant(omega, 0.0, 1.0 / omega, 0.0);
        let b = constant(omega, 0.0, 1.0 / omega, 0.01);
        let ratio = b.c_e / a.c_e;
        assert!((ratio.arg() - 0.01).abs() < 1e-12);
        assert!((ratio.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn halving_step_converges() {
        let drive = PulseDrive {
            b: 1.0,
            rabi_scale: 300.0,
            detuning: 20.0,
        };
        let field = |t: f64| {
            let a = (PI * t / 0.01).sin();
            Complex64::new(a, a * 1e-4 * (t / 0.01 - 0.5))
        };
        let s = IntegratorSettings::default();
        let a = propagate_pulse(TwoLevelState::ground(), 0.0, 0.01, field, &drive, &s).unwrap();
        let b = propagate_pulse(TwoLevelState::ground(), 0.0, 0.01, field, &drive, &s.refined())
            .unwrap();
        assert!((a.excited_probability() - b.excited_probability()).abs() < 1e-10);
    }

    #[test]
    fn near_null_reported() {
        let drive = PulseDrive {
            b: 1.0,
            rabi_scale: 10.0,
            detuning: 0.0,
        };
        let err = propagate_pulse(
            TwoLevelState::ground(),
            0.0,
            0.1,
            |_| Complex64::new(0.0, 1e-3),
            &drive,
            &IntegratorSettings::default(),
        );
        assert!(matches!(err, Err(DynamicsError::NearNull { .. })));
    }

    #[test]
    fn underflow_reported() {
        let drive = PulseDrive {
            b: 1.0,
            rabi_scale: 1e12,
            detuning: 0.0,
        };
        let err = propagate_pulse(
            TwoLevelState::ground(),
            0.0,
            1.0,
            |_| Complex64::new(1.0, 0.0),
            &drive,
            &IntegratorSettings::default(),
        );
        assert!(matches!(err, Err(DynamicsError::StepUnderflow { .. })));
    }

    #[test]
    fn small_angle_trig_matches_libm() {
        for k in -100..=100 {
            let x = k as f64 * 1e-4;
            let (s, c) = sin_cos_small(x);
            assert!((s - x.sin()).abs() < 1e-17);
            assert!((c - x.cos()).abs() < 1e-16);
        }
    }
}
