use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{ApertureStack, CloudModel, DetectionKind, DetectionProfile, TiltVector};
use super::EstimationError;
use crate::cavity::CavityGeometry;
use crate::dynamics::Traversal;

/// Ballistic path `r(t) = r₀ + v₀t + ½at²` in the cavity frame, with `t = 0`
/// at launch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trajectory {
    pub r0: [f64; 3],
    pub v0: [f64; 3],
    pub accel: [f64; 3],
}

/// Cylindrical coordinates plus `(cos φ, sin φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylindricalPoint {
    pub rho: f64,
    pub cos_phi: f64,
    pub sin_phi: f64,
    pub z: f64,
}

/// Standard-normal draws for one trajectory: position then velocity.
pub type Draws = [f64; 6];

pub fn draw_normals<R: Rng + ?Sized>(rng: &mut R) -> Draws {
    let mut d = [0.0; 6];
    for v in &mut d {
        *v = rng.sample(StandardNormal);
    }
    d
}

impl Trajectory {
    /// Untilted trajectory for the given normal draws.
    pub fn from_draws(cloud: &CloudModel, d: &Draws) -> Self {
        let sv = cloud.velocity_sigma();
        let mut r0 = [0.0; 3];
        let mut v0 = [0.0; 3];
        for k in 0..3 {
            r0[k] = cloud.position_mean[k] + cloud.position_sigma[k] * d[k];
            v0[k] = sv * d[k + 3];
        }
        v0[2] += cloud.launch_speed;
        Self {
            r0,
            v0,
            accel: [0.0, 0.0, -cloud.gravity],
        }
    }

    /// The cloud-mean atom with no thermal velocity.
    pub fn nominal(cloud: &CloudModel) -> Self {
        Self::from_draws(cloud, &[0.0; 6])
    }

    #[inline]
    pub fn position(&self, t: f64) -> [f64; 3] {
        let mut p = [0.0; 3];
        for k in 0..3 {
            p[k] = self.r0[k] + t * (self.v0[k] + 0.5 * self.accel[k] * t);
        }
        p
    }

    #[inline]
    pub fn cylindrical(&self, t: f64) -> CylindricalPoint {
        let [x, y, z] = self.position(t);
        let rho = x.hypot(y);
        let (cos_phi, sin_phi) = if rho > 0.0 { (x / rho, y / rho) } else { (1.0, 0.0) };
        CylindricalPoint {
            rho,
            cos_phi,
            sin_phi,
            z,
        }
    }

    pub fn apogee_time(&self) -> f64 {
        -self.v0[2] / self.accel[2]
    }

    pub fn apogee(&self) -> f64 {
        self.position(self.apogee_time())[2]
    }

    /// Times of the upward and downward crossings of height `z`.
    pub fn crossing_times(&self, z: f64) -> Option<(f64, f64)> {
        let a = 0.5 * self.accel[2];
        let b = self.v0[2];
        let c = self.r0[2] - z;
        let disc = b * b - 4.0 * a * c;
        if !(a < 0.0) || !(disc > 0.0) {
            return None;
        }
        // stable quadratic roots
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        let (t1, t2) = (q / a, c / q);
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        Some((lo, hi))
    }

    /// Upward and downward traversals of the field region `[z_min, z_max]`.
    pub fn traversals(&self, geometry: &CavityGeometry) -> Option<(Traversal, Traversal)> {
        let (lo_up, lo_down) = self.crossing_times(geometry.z_min())?;
        let (hi_up, hi_down) = self.crossing_times(geometry.z_max())?;
        if !(lo_up > 0.0) {
            return None;
        }
        Some((
            Traversal {
                t_start: lo_up,
                t_end: hi_up,
            },
            Traversal {
                t_start: hi_down,
                t_end: lo_down,
            },
        ))
    }

    /// Midplane crossing times.
    pub fn midplane_times(&self, geometry: &CavityGeometry) -> Option<(f64, f64)> {
        self.crossing_times(geometry.midplane())
    }
}

/// Gravity in the cavity frame for a fountain tilted by `tilt`.
pub fn tilted_gravity(gravity: f64, tilt: &TiltVector) -> [f64; 3] {
    let (tp, tq) = tilt.effective();
    let (sp, sq) = (tp.sin(), tq.sin());
    [
        gravity * sp,
        gravity * sq,
        -gravity * (1.0 - sp * sp - sq * sq).sqrt(),
    ]
}

/// Draw one trajectory from the cloud, untilted.
pub fn sample_trajectory<R: Rng + ?Sized>(cloud: &CloudModel, rng: &mut R) -> Trajectory {
    Trajectory::from_draws(cloud, &draw_normals(rng))
}

/// Re-express a trajectory in the frame of a tilted fountain.
///
/// Atoms are launched along the fountain axis, which coincides with the
/// cavity axis; the tilt rotates gravity into the cavity frame, giving the
/// atoms a transverse acceleration `g·θ`.
pub fn tilt_transform(traj: &Trajectory, tilt: &TiltVector) -> Result<Trajectory, EstimationError> {
    tilt.validate()?;
    let g = (traj.accel[0].powi(2) + traj.accel[1].powi(2) + traj.accel[2].powi(2)).sqrt();
    Ok(Trajectory {
        accel: tilted_gravity(g, tilt),
        ..*traj
    })
}

/// Whether the atom clears every aperture on each pass through its height.
pub fn apply_apertures(traj: &Trajectory, apertures: &ApertureStack) -> bool {
    apertures.0.iter().all(|ap| match traj.crossing_times(ap.z) {
        None => false,
        Some((t_up, t_down)) => {
            let r2 = ap.radius * ap.radius;
            [t_up, t_down].iter().all(|&t| {
                let [x, y, _] = traj.position(t);
                x * x + y * y <= r2
            })
        }
    })
}

/// Detection-plane crossing on the way down, transverse `(x, y)`.
pub fn detection_point(traj: &Trajectory, profile: &DetectionProfile) -> Option<[f64; 2]> {
    let (_, t) = traj.crossing_times(profile.plane_z)?;
    let [x, y, _] = traj.position(t);
    Some([x, y])
}

/// Relative detection efficiency at transverse position `(x, y)`.
pub fn detection_weight_at(xy: [f64; 2], profile: &DetectionProfile) -> f64 {
    match profile.kind {
        DetectionKind::Uniform => 1.0,
        DetectionKind::GaussianBeam => {
            let (s, c) = profile.beam_axis_azimuth.sin_cos();
            let xb = -xy[0] * s + xy[1] * c;
            (-2.0 * xb * xb / (profile.waist * profile.waist)).exp()
        }
    }
}

/// Detection weight of a trajectory, zero if it never reaches the plane.
pub fn detection_weight(traj: &Trajectory, profile: &DetectionProfile) -> f64 {
    detection_point(traj, profile).map_or(0.0, |xy| detection_weight_at(xy, profile))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::STANDARD_GRAVITY;
    use crate::montecarlo::config::Aperture;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cold() -> CloudModel {
        CloudModel {
            position_sigma: [0.0; 3],
            temperature: 0.0,
            ..CloudModel::default()
        }
    }

    #[test]
    fn cold_cloud_is_deterministic_on_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = sample_trajectory(&cold(), &mut rng);
        let b = sample_trajectory(&cold(), &mut rng);
        assert_eq!(a, b);
        assert_eq!(a.cylindrical(0.3).rho, 0.0);
    }

    #[test]
    fn apogee_matches_kinematics() {
        let c = CloudModel::default();
        let t = Trajectory::nominal(&c);
        let expected = c.launch_speed.powi(2) / (2.0 * STANDARD_GRAVITY);
        assert!((t.apogee() - c.position_mean[2] - expected).abs() < 1e-12);
    }

    #[test]
    fn crossing_times_bracket_apogee() {
        let t = Trajectory::nominal(&CloudModel::default());
        let (a, b) = t.crossing_times(0.0).unwrap();
        assert!((t.position(a)[2]).abs() < 1e-12);
        assert!((t.position(b)[2]).abs() < 1e-12);
        assert!((0.5 * (a + b) - t.apogee_time()).abs() < 1e-12);
        assert!(t.crossing_times(10.0).is_none());
    }

    #[test]
    fn nominal_ramsey_time() {
        let g = CavityGeometry::default();
        let (u, d) = Trajectory::nominal(&CloudModel::default())
            .midplane_times(&g)
            .unwrap();
        assert!((d - u - 0.6087).abs() < 1e-3, "{}", d - u);
    }

    #[test]
    fn zero_tilt_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = sample_trajectory(&CloudModel::default(), &mut rng);
        assert_eq!(tilt_transform(&t, &TiltVector::default()).unwrap(), t);
    }

    #[test]
    fn tilt_displacement_linear_and_odd() {
        let c = cold();
        let t = Trajectory::nominal(&c);
        let g = CavityGeometry::default();
        let shift = |theta: f64| {
            let tt = tilt_transform(&t, &TiltVector::new(theta, 0.0)).unwrap();
            let (u, d) = tt.midplane_times(&g).unwrap();
            tt.position(d)[0] - tt.position(u)[0]
        };
        // x = ½ g sinθ t² at the crossing times of the untilted path, to O(θ²)
        let (u, d) = t.midplane_times(&g).unwrap();
        let oracle = |theta: f64| 0.5 * STANDARD_GRAVITY * theta * (d * d - u * u);
        for theta in [1e-4, 8e-4, 1.6e-3] {
            let s = shift(theta);
            assert!((s - oracle(theta)).abs() < 1e-5 * s.abs(), "{s} {}", oracle(theta));
            assert_eq!(shift(-theta), -s);
        }
        assert!(tilt_transform(&t, &TiltVector::new(0.02, 0.0)).is_err());
    }

    #[test]
    fn endcap_hole_cuts_at_radius() {
        let g = CavityGeometry::default();
        let stack = ApertureStack::cutoff_tubes(&g);
        let mut c = cold();
        c.position_mean[0] = 5.9e-3;
        assert!(apply_apertures(&Trajectory::nominal(&c), &stack));
        c.position_mean[0] = 6.1e-3;
        assert!(!apply_apertures(&Trajectory::nominal(&c), &stack));
        c.position_mean[0] = 0.0;
        assert!(apply_apertures(&Trajectory::nominal(&c), &stack));
    }

    #[test]
    fn unreachable_aperture_cuts() {
        let stack = ApertureStack(vec![Aperture {
            z: 100.0,
            radius: 1.0,
        }]);
        assert!(!apply_apertures(&Trajectory::nominal(&cold()), &stack));
    }

    #[test]
    fn detection_weight_definition() {
        let p = DetectionProfile::gaussian(9.9e-3);
        assert_eq!(detection_weight_at([0.0, 0.0], &p), 1.0);
        // beam along y: efficiency falls off along x
        let w = detection_weight_at([9.9e-3, 0.0], &p);
        assert!((w - (-2f64).exp()).abs() < 1e-15);
        assert!((detection_weight_at([0.0, 5e-3], &p) - 1.0).abs() < 1e-15);
        let u = DetectionProfile::default();
        assert_eq!(detection_weight_at([3e-3, 1e-3], &u), 1.0);
    }
}
