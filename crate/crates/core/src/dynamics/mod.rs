//! Two-level atomic dynamics under the cavity drive.
//!
//! Convention: with `Ω(t) = b·rabi_scale·Re H_z` and `Φ = Im H_z / Re H_z`,
//!
//! ```text
//! i ċ_g = (Ω/2) e^{−iΦ} c_e
//! i ċ_e = −δ c_e + (Ω/2) e^{+iΦ} c_g
//! ```
//!
//! so free precession multiplies `c_e` by `e^{+iδt}`. The sign of `Re H_z` is
//! kept in `Ω`, which matters only in the weak negative lobe of the field
//! inside the cutoff tubes.

mod integrator;
mod observables;
mod state;

pub use integrator::{
    coupling, integrate_channels, propagate_pulse, Channel, IntegrationStats, IntegratorSettings,
};
pub use observables::{
    delta_p, effective_traversal_phase, fringe_contrast, linewidth_from_ramsey_time,
    ramsey_probability, shift_from_delta_p, RamseyObservables, Traversal, DEFAULT_CONTRAST_FLOOR,
    UNDEFINED_PHASE_FLOOR,
};
pub(crate) use observables::phase_relative;
pub use state::{free_evolution, TwoLevelState, Unitary2};

use thiserror::Error;

/// Drive parameters for one pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseDrive {
    /// Microwave amplitude `b`; `b = 1` is an average π/2 pulse.
    pub b: f64,
    /// Rabi angular frequency per unit normalized field at `b = 1` (rad/s).
    pub rabi_scale: f64,
    /// Probe detuning `δ = 2π(ν_probe − ν_atom)` (rad/s).
    pub detuning: f64,
}

impl PulseDrive {
    pub fn amplitude(&self) -> f64 {
        self.b * self.rabi_scale
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DynamicsError {
    #[error(
        "step size underflow at t={t} s: step {step} s below {min_step} s (rate {rate} rad/s)"
    )]
    StepUnderflow {
        t: f64,
        step: f64,
        min_step: f64,
        rate: f64,
    },
    #[error("field near null at t={t} s: Re H_z={re}, Im H_z={im}")]
    NearNull { t: f64, re: f64, im: f64 },
    #[error("traversal coupling element |U_eg|={magnitude} too small; pulse area is near a multiple of π")]
    UndefinedPhase { magnitude: f64 },
    #[error("contrast {contrast} below floor {floor}; frequency conversion refused")]
    ContrastTooLow { contrast: f64, floor: f64 },
    #[error("invalid dynamics input: {0}")]
    InvalidInput(String),
}
