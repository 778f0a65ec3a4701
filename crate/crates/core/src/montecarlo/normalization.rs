//! Calibration of the Rabi scale so that `b = 1` is a π/2 pulse.

use std::f64::consts::FRAC_PI_2;

use super::config::{CloudModel, NormalizationMeasure};
use super::EstimationError;
use crate::cavity::CavityField;

const Z_INTERVALS: usize = 4000;
const RHO_INTERVALS: usize = 64;

/// Pulse area per unit Rabi scale for a vertical traversal at radius `ρ`:
/// `A(ρ) = ∫ H₀z(ρ, z) / v(z) dz` over the field region, for an atom launched
/// at the cloud's mean height and launch speed.
pub fn traversal_area(field: &CavityField, cloud: &CloudModel, rho: f64) -> f64 {
    let geo = field.geometry();
    let (z0, z1) = (geo.z_min(), geo.z_max());
    let v2_launch = cloud.launch_speed * cloud.launch_speed;
    let zl = cloud.position_mean[2];
    let speed = |z: f64| (v2_launch - 2.0 * cloud.gravity * (z - zl)).sqrt();
    let f = |z: f64| field.sample_unchecked(rho, z).h0 / speed(z);
    // split at the endcaps, where the tube extension has a curvature jump
    let n_tube = Z_INTERVALS / 4;
    simpson(z0, 0.0, n_tube, f)
        + simpson(0.0, geo.height, Z_INTERVALS / 2, f)
        + simpson(geo.height, z1, n_tube, f)
}

/// Rabi angular frequency per unit normalized field at `b = 1`.
pub fn rabi_scale(
    field: &CavityField,
    cloud: &CloudModel,
    measure: NormalizationMeasure,
) -> Result<f64, EstimationError> {
    let area = match measure {
        NormalizationMeasure::OnAxis => traversal_area(field, cloud, 0.0),
        NormalizationMeasure::ApertureAverage => {
            let a = field.geometry().endcap_hole_radius;
            // area-uniform average over the hole disc
            simpson(0.0, a, RHO_INTERVALS, |rho| {
                2.0 * rho / (a * a) * traversal_area(field, cloud, rho)
            })
        }
    };
    if !(area > 0.0 && area.is_finite()) {
        return Err(EstimationError::InvalidConfig(format!(
            "standing-wave pulse area {area} is not positive; check geometry and launch"
        )));
    }
    Ok(FRAC_PI_2 / area)
}

pub(crate) fn simpson(a: f64, b: f64, intervals: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::CavityGeometry;
    use crate::constants::BESSEL_J0_PRIME_ZERO;

    fn field() -> CavityField {
        CavityField::standing_wave(CavityGeometry::default()).unwrap()
    }

    #[test]
    fn disc_average_of_j0() {
        // ⟨J₀(kρ)⟩ over a disc of radius a is 2 J₁(ka) / (ka)
        let f = field();
        let cloud = CloudModel::default();
        let geo = f.geometry().clone();
        let on_axis = rabi_scale(&f, &cloud, NormalizationMeasure::OnAxis).unwrap();
        let avg = rabi_scale(&f, &cloud, NormalizationMeasure::ApertureAverage).unwrap();
        let x = BESSEL_J0_PRIME_ZERO * geo.endcap_hole_radius / geo.radius;
        let expected = 2.0 * libm::j1(x) / x;
        assert!((on_axis / avg - expected).abs() < 1e-8, "{}", on_axis / avg);
    }

    #[test]
    fn area_matches_slow_quadrature() {
        let f = field();
        let cloud = CloudModel::default();
        let geo = f.geometry().clone();
        let coarse = traversal_area(&f, &cloud, 0.0);
        let zl = cloud.position_mean[2];
        let v = |z: f64| (cloud.launch_speed.powi(2) - 2.0 * cloud.gravity * (z - zl)).sqrt();
        // midpoint rule, independent of Simpson
        let n = 200_000;
        let h = (geo.z_max() - geo.z_min()) / n as f64;
        let fine: f64 = (0..n)
            .map(|i| {
                let z = geo.z_min() + (i as f64 + 0.5) * h;
                crate::cavity::h0z_te011(&geo, 0.0, z).unwrap() / v(z) * h
            })
            .sum();
        assert!((coarse - fine).abs() < 1e-9 * fine, "{coarse} {fine}");
    }
}
