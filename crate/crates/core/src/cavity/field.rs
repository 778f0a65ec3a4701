use num_complex::Complex64;

use super::feeds::{FeedConfig, FeedWeights};
use super::field_map::{FieldMap, GComponent, Grid, Parity};
use super::geometry::{h0z_unchecked, CavityGeometry};
use super::FieldError;

/// Default near-null floor for `|Re H_z|`, as a fraction of the peak `H₀z`.
pub const DEFAULT_NULL_FLOOR: f64 = 1e-6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Field components at one `(ρ, z)` point, before feed weighting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub h0: f64,
    /// Cosine-parity `g_m` for m = 0, 1, 2.
    pub cos: [Complex64; 3],
    /// Sine-parity `g_m` for m = 0, 1, 2 (m = 0 always zero).
    pub sin: [Complex64; 3],
}

impl FieldSample {
    /// Combine with feed weights at azimuth `(cos φ, sin φ)`.
    #[inline]
    pub fn hz(&self, w: &FeedWeights, cos_phi: f64, sin_phi: f64) -> Complex64 {
        let cos2 = cos_phi * cos_phi - sin_phi * sin_phi;
        let sin2 = 2.0 * cos_phi * sin_phi;
        let trig = [(1.0, 0.0), (cos_phi, sin_phi), (cos2, sin2)];
        let mut h = Complex64::new(self.h0, 0.0);
        for m in 0..3 {
            let (c, s) = trig[m];
            h += self.cos[m] * (w.cos_coef[m] * c + w.sin_coef[m] * s);
            h += self.sin[m] * (w.wall_loss * s);
        }
        h
    }
}

/// Bilinear interpolation table for one component, stored reduced as
/// `g_m / ρ^m` so the axis scaling is exact between nodes.
#[derive(Debug, Clone)]
struct Table {
    m: i32,
    re: Vec<f64>,
    im: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Axis {
    nodes: Vec<f64>,
    uniform_step: Option<f64>,
}

impl Axis {
    fn new(nodes: &[f64]) -> Self {
        let n = nodes.len();
        let h = (nodes[n - 1] - nodes[0]) / (n - 1) as f64;
        let uniform = nodes
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h);
        Self {
            nodes: nodes.to_vec(),
            uniform_step: uniform.then_some(h),
        }
    }

    /// Cell index and fractional offset, clamped to the node range.
    #[inline]
    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.nodes.len();
        let x0 = self.nodes[0];
        let i = match self.uniform_step {
            Some(h) => (((x - x0) / h).floor().max(0.0) as usize).min(n - 2),
            None => self
                .nodes
                .partition_point(|&v| v <= x)
                .saturating_sub(1)
                .min(n - 2),
        };
        let (a, b) = (self.nodes[i], self.nodes[i + 1]);
        let t = ((x - a) / (b - a)).clamp(0.0, 1.0);
        (i, t)
    }
}

/// Field evaluator for one cavity: analytic (or loaded) standing wave plus the
/// gridded perturbation components. Immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct CavityField {
    geometry: CavityGeometry,
    decay_length: f64,
    rho_axis: Axis,
    z_axis: Axis,
    n_z: usize,
    h0_override: Option<Vec<f64>>,
    h0_peak: f64,
    cos_tables: [Option<Table>; 3],
    sin_tables: [Option<Table>; 3],
    /// Wall-loss term reuses the cosine `g₁` profile when the map has no
    /// sine-parity component.
    wall_loss_from_cos: bool,
    null_floor: f64,
    has_g: bool,
}

impl CavityField {
    pub fn new(geometry: CavityGeometry, map: &FieldMap) -> Result<Self, FieldError> {
        geometry.validate()?;
        map.validate()?;
        check_span("rho_nodes", &map.grid.rho_nodes, 0.0, geometry.radius)?;
        check_span("z_nodes", &map.grid.z_nodes, 0.0, geometry.height)?;

        let mut cos_tables: [Option<Table>; 3] = [None, None, None];
        let mut sin_tables: [Option<Table>; 3] = [None, None, None];
        for c in &map.g {
            let t = reduce(&map.grid, c);
            match c.parity {
                Parity::Cos => cos_tables[c.m as usize] = Some(t),
                Parity::Sin => sin_tables[c.m as usize] = Some(t),
            }
        }
        let has_sin = sin_tables.iter().any(Option::is_some);
        let h0_peak = map
            .h0z
            .as_ref()
            .map(|h| h.iter().fold(0.0_f64, |a, v| a.max(v.abs())))
            .unwrap_or(1.0);
        Ok(Self {
            decay_length: geometry.decay_length(),
            geometry,
            rho_axis: Axis::new(&map.grid.rho_nodes),
            z_axis: Axis::new(&map.grid.z_nodes),
            n_z: map.grid.n_z(),
            h0_override: map.h0z.clone(),
            h0_peak,
            cos_tables,
            sin_tables,
            wall_loss_from_cos: !has_sin,
            null_floor: DEFAULT_NULL_FLOOR,
            has_g: !map.g.is_empty(),
        })
    }

    /// The bare standing wave, `g ≡ 0`.
    pub fn standing_wave(geometry: CavityGeometry) -> Result<Self, FieldError> {
        let grid = Grid::uniform(geometry.radius, 2, geometry.height, 2);
        Self::new(geometry, &FieldMap::empty(grid))
    }

    pub fn with_null_floor(mut self, fraction_of_peak: f64) -> Self {
        self.null_floor = fraction_of_peak;
        self
    }

    pub fn geometry(&self) -> &CavityGeometry {
        &self.geometry
    }

    pub fn has_perturbation(&self) -> bool {
        self.has_g
    }

    /// Absolute `|Re H_z|` floor below which the field phase is undefined.
    pub fn null_floor(&self) -> f64 {
        self.null_floor * self.h0_peak
    }

    pub fn h0_peak(&self) -> f64 {
        self.h0_peak
    }

    pub fn h0z(&self, rho: f64, z: f64) -> Result<f64, FieldError> {
        self.check(rho, z)?;
        Ok(self.h0_unchecked(rho, z))
    }

    #[inline]
    fn h0_unchecked(&self, rho: f64, z: f64) -> f64 {
        match &self.h0_override {
            Some(h0) if (0.0..=self.geometry.height).contains(&z) => {
                let (i, s) = self.rho_axis.locate(rho);
                let (j, t) = self.z_axis.locate(z);
                bilinear(h0, self.n_z, i, j, s, t)
            }
            _ => h0z_unchecked(&self.geometry, self.decay_length, rho, z),
        }
    }

    fn check(&self, rho: f64, z: f64) -> Result<(), FieldError> {
        if self.geometry.contains(rho, z) {
            Ok(())
        } else {
            Err(FieldError::OutOfDomain { rho, z })
        }
    }

    pub fn sample(&self, rho: f64, z: f64) -> Result<FieldSample, FieldError> {
        self.check(rho, z)?;
        Ok(self.sample_unchecked(rho, z))
    }

    /// Components at `(ρ, z)` without the domain check. Perturbations vanish
    /// outside the gridded cavity body.
    #[inline]
    pub fn sample_unchecked(&self, rho: f64, z: f64) -> FieldSample {
        let h0 = self.h0_unchecked(rho, z);
        let mut out = FieldSample {
            h0,
            cos: [ZERO; 3],
            sin: [ZERO; 3],
        };
        if !self.has_g || z < self.z_axis.nodes[0] || z > *self.z_axis.nodes.last().unwrap() {
            return out;
        }
        let (i, s) = self.rho_axis.locate(rho);
        let (j, t) = self.z_axis.locate(z);
        for m in 0..3 {
            if let Some(tab) = &self.cos_tables[m] {
                out.cos[m] = tab.eval(self.n_z, i, j, s, t, rho);
            }
            if let Some(tab) = &self.sin_tables[m] {
                out.sin[m] = tab.eval(self.n_z, i, j, s, t, rho);
            }
        }
        if self.wall_loss_from_cos {
            out.sin[1] = out.cos[1];
        }
        out
    }

    /// Complex `H_z` at cylindrical coordinates `(ρ, φ, z)`.
    pub fn synthesize_hz(
        &self,
        feeds: &FeedConfig,
        rho: f64,
        phi: f64,
        z: f64,
    ) -> Result<Complex64, FieldError> {
        let sample = self.sample(rho, z)?;
        Ok(sample.hz(&feeds.weights(), phi.cos(), phi.sin()))
    }

    /// Field phase `Φ = Im H_z / Re H_z`.
    pub fn phase_field(
        &self,
        feeds: &FeedConfig,
        rho: f64,
        phi: f64,
        z: f64,
    ) -> Result<f64, FieldError> {
        let h = self.synthesize_hz(feeds, rho, phi, z)?;
        if h.re.abs() < self.null_floor() {
            return Err(FieldError::NearNull { rho, z });
        }
        Ok(h.im / h.re)
    }
}

impl Table {
    #[inline]
    fn eval(&self, n_z: usize, i: usize, j: usize, s: f64, t: f64, rho: f64) -> Complex64 {
        let scale = rho.powi(self.m);
        Complex64::new(
            bilinear(&self.re, n_z, i, j, s, t) * scale,
            bilinear(&self.im, n_z, i, j, s, t) * scale,
        )
    }
}

#[inline]
fn bilinear(v: &[f64], n_z: usize, i: usize, j: usize, s: f64, t: f64) -> f64 {
    let k = i * n_z + j;
    let v00 = v[k];
    let v01 = v[k + 1];
    let v10 = v[k + n_z];
    let v11 = v[k + n_z + 1];
    (1.0 - s) * ((1.0 - t) * v00 + t * v01) + s * ((1.0 - t) * v10 + t * v11)
}

fn reduce(grid: &Grid, c: &GComponent) -> Table {
    let m = c.m as i32;
    let n_z = grid.n_z();
    let mut re = c.re.clone();
    let mut im = c.im.clone();
    if m > 0 {
        for (ir, &rho) in grid.rho_nodes.iter().enumerate().skip(1) {
            let scale = rho.powi(m);
            for iz in 0..n_z {
                let k = grid.index(ir, iz);
                re[k] /= scale;
                im[k] /= scale;
            }
        }
        // axis column: linear extrapolation of the reduced field
        for iz in 0..n_z {
            let k1 = grid.index(1, iz);
            let (a, b) = if grid.n_rho() >= 3 {
                let k2 = grid.index(2, iz);
                let f = grid.rho_nodes[1] / (grid.rho_nodes[2] - grid.rho_nodes[1]);
                (re[k1] - (re[k2] - re[k1]) * f, im[k1] - (im[k2] - im[k1]) * f)
            } else {
                (re[k1], im[k1])
            };
            re[iz] = a;
            im[iz] = b;
        }
    }
    Table { m, re, im }
}

fn check_span(name: &str, nodes: &[f64], lo: f64, hi: f64) -> Result<(), FieldError> {
    let first = nodes[0];
    let last = nodes[nodes.len() - 1];
    let tol = 1e-9 * hi.abs().max(1e-12);
    if (first - lo).abs() > tol || (last - hi).abs() > tol {
        return Err(FieldError::GridMismatch(format!(
            "{name} spans [{first}, {last}], expected [{lo}, {hi}]"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::cavity::ParametricModel;

    fn field(model: ParametricModel) -> CavityField {
        let geo = CavityGeometry::default();
        let map = model.generate(&geo).unwrap();
        CavityField::new(geo, &map).unwrap()
    }

    fn g1_only() -> CavityField {
        field(ParametricModel {
            g1_amplitude: 1e-4,
            ..Default::default()
        })
    }

    // Deterministic scatter of points inside the cavity body and tubes.
    fn points(n: usize) -> Vec<(f64, f64, f64)> {
        let geo = CavityGeometry::default();
        let mut s = 0x2545_f491_4f6c_dd1d_u64;
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        (0..n)
            .map(|_| {
                let rho = geo.endcap_hole_radius * next();
                let phi = 2.0 * PI * next();
                let z = geo.z_min() + (geo.z_max() - geo.z_min()) * next();
                (rho, phi, z)
            })
            .collect()
    }

    #[test]
    fn no_perturbation_is_pure_standing_wave() {
        let f = CavityField::standing_wave(CavityGeometry::default()).unwrap();
        for (rho, phi, z) in points(50) {
            let h = f.synthesize_hz(&FeedConfig::single(0.0), rho, phi, z).unwrap();
            assert_eq!(h.im, 0.0);
            assert_eq!(h.re, f.h0z(rho, z).unwrap());
        }
    }

    #[test]
    fn balanced_feeds_cancel_cosine_m1() {
        let f = g1_only();
        for (rho, phi, z) in points(100) {
            if !(0.0..=f.geometry().height).contains(&z) {
                continue;
            }
            let h = f.synthesize_hz(&FeedConfig::balanced(), rho, phi, z).unwrap();
            assert!(h.im.abs() < 1e-20, "{h}");
            let p = f.phase_field(&FeedConfig::balanced(), rho, phi, z);
            if let Ok(p) = p {
                assert!(p.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_feed_on_resonance_keeps_real_part() {
        let f = g1_only();
        for (rho, phi, z) in points(100) {
            let h = f.synthesize_hz(&FeedConfig::single(0.0), rho, phi, z).unwrap();
            assert_eq!(h.re, f.h0z(rho, z).unwrap());
        }
    }

    #[test]
    fn only_m0_on_axis() {
        let f = field(ParametricModel {
            g1_amplitude: 1e-4,
            g2_amplitude: 1e-4,
            ..Default::default()
        });
        for &z in &[0.002, 0.01, 0.02] {
            let s = f.sample(0.0, z).unwrap();
            assert_eq!(s.cos[1], ZERO);
            assert_eq!(s.cos[2], ZERO);
        }
    }

    #[test]
    fn feed_swap_rotates_phase_by_pi() {
        let f = field(ParametricModel {
            g0_amplitude: 1e-4,
            g1_amplitude: 1e-4,
            g2_amplitude: 1e-4,
            ..Default::default()
        });
        let feeds = FeedConfig {
            feeds: vec![
                crate::cavity::Feed::new(0.0, 0.7, 0.2),
                crate::cavity::Feed::new(PI, 0.3, -0.1),
            ],
            normalized_detuning: 0.3,
            wall_loss_sin_amplitude: 0.0,
        };
        let swapped = feeds.swapped();
        for (rho, phi, z) in points(100) {
            let a = f.phase_field(&feeds, rho, phi, z);
            let b = f.phase_field(&swapped, rho, phi + PI, z);
            if let (Ok(a), Ok(b)) = (a, b) {
                assert!((a - b).abs() < 1e-12, "{a} {b}");
            }
        }
    }

    #[test]
    fn superposition_in_feed_weights() {
        let f = field(ParametricModel {
            g0_amplitude: 1e-4,
            g1_amplitude: 2e-4,
            g2_amplitude: 1e-4,
            ..Default::default()
        });
        let fa = FeedConfig::single(0.0).with_detuning(0.4);
        let mut fb = FeedConfig::single(PI).with_detuning(0.4);
        fb.feeds[0].amplitude = 0.6;
        fb.feeds[0].phase = 1.1;
        let mut both = fa.clone();
        both.feeds.push(fb.feeds[0].clone());
        for (rho, phi, z) in points(100) {
            let h0 = f.h0z(rho, z).unwrap();
            let a = f.synthesize_hz(&fa, rho, phi, z).unwrap() - h0;
            let b = f.synthesize_hz(&fb, rho, phi, z).unwrap() - h0;
            let ab = f.synthesize_hz(&both, rho, phi, z).unwrap() - h0;
            assert!((ab - a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn near_null_is_reported() {
        let f = g1_only();
        let err = f.phase_field(&FeedConfig::single(0.0), 0.001, 0.0, 0.0);
        assert!(matches!(err, Err(FieldError::NearNull { .. })));
    }

    #[test]
    fn phase_matches_first_order_form() {
        // Φ ≈ Im[(2Δω/Γ + i) g]/H₀ for a perturbative field
        let f = g1_only();
        let feeds = FeedConfig::single(0.0).with_detuning(0.25);
        let (rho, phi, z) = (0.004, 0.3_f64, 0.012);
        let g = f.sample(rho, z).unwrap().cos[1] * phi.cos();
        let h0 = f.h0z(rho, z).unwrap();
        let first = (Complex64::new(0.5, 1.0) * g).im / h0;
        let exact = f.phase_field(&feeds, rho, phi, z).unwrap();
        assert!((exact - first).abs() < 1e-4 * first.abs());
    }

    #[test]
    fn grid_mismatch_rejected() {
        let geo = CavityGeometry::default();
        let map = FieldMap::empty(Grid::uniform(0.02, 3, geo.height, 3));
        assert!(matches!(
            CavityField::new(geo, &map),
            Err(FieldError::GridMismatch(_))
        ));
    }
}
