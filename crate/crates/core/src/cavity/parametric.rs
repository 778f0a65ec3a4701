//! Closed-form perturbation fields for desk studies when no finite-element
//! export is available.
//!
//! With `u = π(z − d/2)/d` and `L(z) = sin(πz/d) = cos u`:
//!
//! | component | profile |
//! |-----------|---------|
//! | `g₀` cos  | `A₀ J₀(χ′₀₁ρ/R) L(z) (2u/π)²` |
//! | `g₁` cos  | `A₁ (Q_ref/Q) (ρ/R) L(z)` |
//! | `g₂` cos  | `A₂ (ρ/R)² L(z)` |
//! | `g₁` sin  | `(Q_ref/Q) (ρ/R) L(z) (1 + 2u/π)/2` |
//!
//! `g₀` is proportional to the standing wave, so on resonance its phase
//! `A₀ (2u/π)²` has no transverse gradient and is symmetric about the
//! midplane, growing toward the endcaps where power is absorbed. The wall-loss
//! `g₁ sin φ` profile has unit amplitude (the feed configuration scales it)
//! and is weighted toward the upper endcap.

use serde::{Deserialize, Serialize};

use super::field_map::{FieldMap, GComponent, Grid, Parity};
use super::geometry::{radial_profile, CavityGeometry};
use super::FieldError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParametricModel {
    /// Endcap phase of the `m = 0` longitudinal profile (rad).
    pub g0_amplitude: f64,
    /// `m = 1` amplitude at `reference_q`.
    pub g1_amplitude: f64,
    /// `m = 2` amplitude at `ρ = R`.
    pub g2_amplitude: f64,
    /// Emit the sine-parity `g₁` used for inhomogeneous wall losses.
    pub wall_loss_profile: bool,
    /// Loaded Q at which `g1_amplitude` is quoted; `m = 1` scales as 1/Q.
    pub reference_q: f64,
    pub rho_nodes: usize,
    pub z_nodes: usize,
}

impl Default for ParametricModel {
    fn default() -> Self {
        Self {
            g0_amplitude: 0.0,
            g1_amplitude: 0.0,
            g2_amplitude: 0.0,
            wall_loss_profile: false,
            reference_q: 7000.0,
            rho_nodes: 201,
            z_nodes: 201,
        }
    }
}

impl ParametricModel {
    pub fn validate(&self) -> Result<(), FieldError> {
        let amps = [self.g0_amplitude, self.g1_amplitude, self.g2_amplitude];
        if amps.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(FieldError::InvalidModel(format!(
                "component amplitudes must be finite and >= 0, got {amps:?}"
            )));
        }
        if !(self.reference_q > 0.0 && self.reference_q.is_finite()) {
            return Err(FieldError::InvalidModel("reference_q must be > 0".into()));
        }
        if self.rho_nodes < 3 || self.z_nodes < 3 {
            return Err(FieldError::InvalidModel(
                "grid needs at least 3 nodes per axis".into(),
            ));
        }
        Ok(())
    }

    pub fn generate(&self, geometry: &CavityGeometry) -> Result<FieldMap, FieldError> {
        self.validate()?;
        geometry.validate()?;
        let grid = Grid::uniform(geometry.radius, self.rho_nodes, geometry.height, self.z_nodes);
        let q_scale = self.reference_q / geometry.loaded_q;
        let r = geometry.radius;
        let d = geometry.height;
        let pi = std::f64::consts::PI;

        let make = |m: u32, parity: Parity, f: &dyn Fn(f64, f64) -> f64| -> GComponent {
            let mut re = vec![0.0; grid.len()];
            for (ir, &rho) in grid.rho_nodes.iter().enumerate() {
                for (iz, &z) in grid.z_nodes.iter().enumerate() {
                    re[grid.index(ir, iz)] = f(rho, z);
                }
            }
            let n = re.len();
            GComponent {
                m,
                parity,
                re,
                im: vec![0.0; n],
            }
        };

        let u = |z: f64| pi * (z - 0.5 * d) / d;
        let lz = |z: f64| (pi * z / d).sin();
        let mut g = Vec::new();
        if self.g0_amplitude != 0.0 {
            let a = self.g0_amplitude;
            g.push(make(0, Parity::Cos, &|rho, z| {
                let s = 2.0 * u(z) / pi;
                a * radial_profile(geometry, rho) * lz(z) * s * s
            }));
        }
        if self.g1_amplitude != 0.0 {
            let a = self.g1_amplitude * q_scale;
            g.push(make(1, Parity::Cos, &|rho, z| a * (rho / r) * lz(z)));
        }
        if self.g2_amplitude != 0.0 {
            let a = self.g2_amplitude;
            g.push(make(2, Parity::Cos, &|rho, z| a * (rho / r).powi(2) * lz(z)));
        }
        if self.wall_loss_profile {
            g.push(make(1, Parity::Sin, &|rho, z| {
                q_scale * (rho / r) * lz(z) * 0.5 * (1.0 + 2.0 * u(z) / pi)
            }));
        }

        let map = FieldMap {
            grid,
            h0z: None,
            g,
            meta: serde_json::json!({
                "source": "parametric",
                "model": self,
                "loaded_q": geometry.loaded_q,
                "mode_frequencies_hz": { "m0": 9.1926e9, "m1": 9.6436e9 },
            }),
        };
        map.validate()?;
        Ok(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> ParametricModel {
        ParametricModel {
            g0_amplitude: 1e-4,
            g1_amplitude: 1e-4,
            g2_amplitude: 1e-4,
            wall_loss_profile: true,
            rho_nodes: 51,
            z_nodes: 41,
            ..Default::default()
        }
    }

    #[test]
    fn m0_phase_is_midplane_symmetric() {
        let geo = CavityGeometry::default();
        let map = model().generate(&geo).unwrap();
        let g0 = map.component(0, Parity::Cos).unwrap();
        let grid = &map.grid;
        let nz = grid.n_z();
        for ir in 0..grid.n_rho() {
            for iz in 0..nz {
                let a = g0.re[grid.index(ir, iz)];
                let b = g0.re[grid.index(ir, nz - 1 - iz)];
                assert!((a - b).abs() < 1e-12 * 1e-4, "{a} {b}");
            }
        }
    }

    #[test]
    fn m1_scales_inversely_with_q() {
        let geo = CavityGeometry::default();
        let m = model();
        let a = m.generate(&geo).unwrap();
        let b = m
            .generate(&CavityGeometry {
                loaded_q: 14000.0,
                ..geo
            })
            .unwrap();
        let ga = a.component(1, Parity::Cos).unwrap();
        let gb = b.component(1, Parity::Cos).unwrap();
        for (x, y) in ga.re.iter().zip(&gb.re) {
            assert!((x - 2.0 * y).abs() <= 1e-15 * x.abs().max(1e-30));
        }
    }

    #[test]
    fn m2_is_rho_squared() {
        let geo = CavityGeometry::default();
        let map = model().generate(&geo).unwrap();
        let g2 = map.component(2, Parity::Cos).unwrap();
        let grid = &map.grid;
        let iz = grid.n_z() / 3;
        let reference = g2.re[grid.index(1, iz)] / grid.rho_nodes[1].powi(2);
        for ir in 1..grid.n_rho() {
            let rho = grid.rho_nodes[ir];
            if rho > geo.endcap_hole_radius {
                break;
            }
            let v = g2.re[grid.index(ir, iz)] / rho.powi(2);
            assert!(((v - reference) / reference).abs() < 1e-6);
        }
    }

    #[test]
    fn negative_amplitude_rejected() {
        let m = ParametricModel {
            g1_amplitude: -1.0,
            ..Default::default()
        };
        assert!(matches!(
            m.generate(&CavityGeometry::default()),
            Err(FieldError::InvalidModel(_))
        ));
    }
}
