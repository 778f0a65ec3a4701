use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ApertureStack, Method, SimulationConfig};
use super::estimate::PassResult;
use super::normalization::rabi_scale;
use super::trajectory::{apply_apertures, detection_point, draw_normals, tilt_transform, Trajectory};
use super::EstimationError;
use crate::cavity::{CavityField, FeedWeights};
use crate::dynamics::{
    integrate_channels, linewidth_from_ramsey_time, phase_relative, Channel, DynamicsError,
    IntegratorSettings, TwoLevelState, Traversal,
};


/// Probe detunings of the baseline channels, in units of `δ_h = πΔν`:
/// line centre, the two half-width points, and the first fringe minimum.
pub const BASELINE_DETUNINGS: [f64; 4] = [0.0, 1.0, -1.0, 2.0];

/// Ramsey timing of the nominal (cloud-mean) trajectory.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NominalTiming {
    /// Midplane-to-midplane time, or the configured override (s).
    pub ramsey_time: f64,
    /// Fringe fullwidth `Δν = 1/(2T)` (Hz).
    pub linewidth: f64,
    /// Probe detuning at `Δν/2`, `δ_h = πΔν` (rad/s).
    pub half_width_detuning: f64,
}

/// What one pass over the trajectories computes besides the baseline fringe.
#[derive(Debug, Clone, Default)]
pub struct PassSpec {
    /// Feed configurations evaluated against the `g = 0` baseline.
    pub variants: Vec<FeedWeights>,
    /// Also integrate a downward-only traversal for single-passage excitation.
    pub rabi: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Survived,
    Cut,
    Flagged,
}

/// Everything the aggregation step needs from one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub status: Status,
    /// Transverse position at the detection plane.
    pub detection: Option<[f64; 2]>,
    /// Baseline excitation at each of [`BASELINE_DETUNINGS`].
    pub p0: [f64; 4],
    /// Per-variant `δP_i = ((P⁺ − P₀⁺) − (P⁻ − P₀⁻))/2`.
    pub dp: Vec<f64>,
    pub rabi_up: f64,
    pub rabi_down: f64,
}

impl TrajectoryRecord {
    fn excluded(status: Status) -> Self {
        Self {
            status,
            detection: None,
            p0: [0.0; 4],
            dp: Vec::new(),
            rabi_up: 0.0,
            rabi_down: 0.0,
        }
    }
}

/// Prepared simulation: field, calibration and timing for one configuration.
#[derive(Debug, Clone)]
pub struct Engine {
    config: SimulationConfig,
    field: CavityField,
    apertures: ApertureStack,
    rabi_scale: f64,
    timing: NominalTiming,
    settings: IntegratorSettings,
}

impl Engine {
    pub fn new(config: &SimulationConfig) -> Result<Self, EstimationError> {
        config.validate()?;
        let field = config
            .field
            .build(&config.geometry, config.integrator.null_floor)?;
        Self::with_field(config, field)
    }

    /// Reuse an already built field evaluator.
    pub fn with_field(config: &SimulationConfig, field: CavityField) -> Result<Self, EstimationError> {
        config.validate()?;
        let scale = rabi_scale(&field, &config.cloud, config.drive.normalization)?;
        let nominal = Trajectory::nominal(&config.cloud);
        let ramsey_time = match config.drive.ramsey_time {
            Some(t) => t,
            None => {
                let (u, d) = nominal.midplane_times(&config.geometry).ok_or_else(|| {
                    EstimationError::InvalidConfig("nominal trajectory misses the cavity".into())
                })?;
                d - u
            }
        };
        let linewidth = linewidth_from_ramsey_time(ramsey_time);
        let mut settings = config.integrator;
        settings.null_floor = field.null_floor();
        Ok(Self {
            apertures: config.aperture_stack(),
            config: config.clone(),
            field,
            rabi_scale: scale,
            timing: NominalTiming {
                ramsey_time,
                linewidth,
                half_width_detuning: std::f64::consts::PI * linewidth,
            },
            settings,
        })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn field(&self) -> &CavityField {
        &self.field
    }

    pub fn rabi_scale(&self) -> f64 {
        self.rabi_scale
    }

    pub fn timing(&self) -> NominalTiming {
        self.timing
    }

    /// Trajectories per estimator unit.
    pub fn unit_size(&self) -> usize {
        let e = &self.config.estimator;
        (if e.antithetic { 2 } else { 1 }) * (if e.rotation { 2 } else { 1 })
    }

    /// Trajectory `member` of estimator unit `unit`, tilted into the cavity
    /// frame. With antithetic sampling odd members mirror the preceding one
    /// through the cloud mean; with rotation the second half of the unit is
    /// the first half turned by 90° about the launch axis.
    pub fn trajectory(&self, seed: u64, unit: usize, member: usize) -> Result<Trajectory, EstimationError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(unit as u64);
        let mut d = draw_normals(&mut rng);
        let e = &self.config.estimator;
        let half = if e.antithetic { 2 } else { 1 };
        if e.rotation && member >= half {
            d = [-d[1], d[0], d[2], -d[4], d[3], d[5]];
        }
        if e.antithetic && member % 2 == 1 {
            d.iter_mut().for_each(|v| *v = -*v);
        }
        tilt_transform(&Trajectory::from_draws(&self.config.cloud, &d), &self.config.tilt)
    }

    fn members(&self, samples: usize, unit: usize) -> usize {
        let m = self.unit_size();
        (samples - m * unit).min(m)
    }

    pub fn unit_count(&self, samples: usize) -> usize {
        samples.div_ceil(self.unit_size())
    }

    /// Evaluate every trajectory of a run on `workers` threads.
    pub fn run(
        &self,
        spec: &PassSpec,
        samples: usize,
        seed: u64,
        workers: usize,
    ) -> Result<PassResult, EstimationError> {
        if samples == 0 {
            return Err(EstimationError::InvalidConfig("samples must be > 0".into()));
        }
        let n_units = self.unit_count(samples);
        let start = Instant::now();
        let done = AtomicUsize::new(0);
        let tick = (n_units / 10).max(1);
        let work = || {
            (0..n_units)
                .into_par_iter()
                .map(|u| {
                    let recs = (0..self.members(samples, u))
                        .map(|k| {
                            let traj = self.trajectory(seed, u, k)?;
                            self.evaluate(&traj, spec)
                        })
                        .collect::<Result<Vec<_>, _>>();
                    let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                    if n % tick == 0 && n_units >= 1000 {
                        log::debug!("  {n}/{n_units} units");
                    }
                    recs
                })
                .collect::<Result<Vec<_>, _>>()
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| EstimationError::InvalidConfig(format!("worker pool: {e}")))?;
        let units = pool.install(work)?;
        log::debug!(
            "pass: {samples} trajectories, {} variants, b = {}, {:.2} s",
            spec.variants.len(),
            self.config.drive.b,
            start.elapsed().as_secs_f64()
        );
        Ok(PassResult::new(
            units,
            spec.variants.len(),
            self.timing,
            self.rabi_scale,
            samples,
            seed,
        ))
    }

    /// Integrate one trajectory through both traversals.
    pub fn evaluate(&self, traj: &Trajectory, spec: &PassSpec) -> Result<TrajectoryRecord, EstimationError> {
        if !apply_apertures(traj, &self.apertures) {
            return Ok(TrajectoryRecord::excluded(Status::Cut));
        }
        let Some((up, down)) = traj.traversals(&self.config.geometry) else {
            return Ok(TrajectoryRecord::excluded(Status::Cut));
        };
        let result = match self.config.estimator.method {
            Method::FullIntegration => self.full_integration(traj, up, down, spec),
            Method::EffectivePhase => self.effective_phase(traj, up, down, spec),
        };
        match result {
            Ok(mut rec) => {
                rec.detection = detection_point(traj, &self.config.detection);
                Ok(rec)
            }
            Err(DynamicsError::NearNull { .. }) => Ok(TrajectoryRecord::excluded(Status::Flagged)),
            Err(e) => Err(e.into()),
        }
    }

    fn integrate(
        &self,
        traj: &Trajectory,
        segment: Traversal,
        variants: &[FeedWeights],
        channels: &[Channel],
        states: &mut [TwoLevelState],
    ) -> Result<(), DynamicsError> {
        let field = &self.field;
        integrate_channels(
            segment.t_start,
            segment.t_end,
            variants.len() + 1,
            self.config.drive.b * self.rabi_scale,
            |t, out: &mut [Complex64]| {
                let p = traj.cylindrical(t);
                let s = field.sample_unchecked(p.rho, p.z);
                out[0] = Complex64::new(s.h0, 0.0);
                for (o, w) in out[1..].iter_mut().zip(variants) {
                    *o = s.hz(w, p.cos_phi, p.sin_phi);
                }
            },
            channels,
            states,
            &self.settings,
        )?;
        Ok(())
    }

    fn full_integration(
        &self,
        traj: &Trajectory,
        up: Traversal,
        down: Traversal,
        spec: &PassSpec,
    ) -> Result<TrajectoryRecord, DynamicsError> {
        let dh = self.timing.half_width_detuning;
        let mut channels: Vec<Channel> = BASELINE_DETUNINGS
            .iter()
            .map(|k| Channel {
                drive: 0,
                detuning: k * dh,
            })
            .collect();
        for v in 0..spec.variants.len() {
            for sign in [1.0, -1.0] {
                channels.push(Channel {
                    drive: v + 1,
                    detuning: sign * dh,
                });
            }
        }
        let mut states = vec![TwoLevelState::ground(); channels.len()];
        self.integrate(traj, up, &spec.variants, &channels, &mut states)?;
        let rabi_up = states[0].excited_probability();

        let gap = down.t_start - up.t_end;
        for (s, c) in states.iter_mut().zip(&channels) {
            *s = crate::dynamics::free_evolution(*s, gap, c.detuning);
        }
        if spec.rabi {
            channels.push(Channel {
                drive: 0,
                detuning: 0.0,
            });
            states.push(TwoLevelState::ground());
        }
        self.integrate(traj, down, &spec.variants, &channels, &mut states)?;

        let p: Vec<f64> = states.iter().map(|s| s.excited_probability()).collect();
        let p0 = [p[0], p[1], p[2], p[3]];
        let dp = (0..spec.variants.len())
            .map(|v| {
                let (pp, pm) = (p[4 + 2 * v], p[5 + 2 * v]);
                0.5 * ((pp - p0[1]) - (pm - p0[2]))
            })
            .collect();
        Ok(TrajectoryRecord {
            status: Status::Survived,
            detection: None,
            p0,
            dp,
            rabi_up,
            rabi_down: if spec.rabi { p[p.len() - 1] } else { 0.0 },
        })
    }

    /// Predict `δP_i` from the effective phases of the two traversals:
    /// `δP = 2 Re(X₀* Y₀) sin(δ_h T_i) (δΦ_down − δΦ_up)` with
    /// `X₀ = U⁰_d,eg U⁰_u,gg` and `Y₀ = U⁰_d,ee U⁰_u,eg`.
    fn effective_phase(
        &self,
        traj: &Trajectory,
        up: Traversal,
        down: Traversal,
        spec: &PassSpec,
    ) -> Result<TrajectoryRecord, DynamicsError> {
        let dh = self.timing.half_width_detuning;
        let nv = spec.variants.len();
        let at_rest = |drive: usize| Channel {
            drive,
            detuning: 0.0,
        };
        let mut channels: Vec<Channel> = BASELINE_DETUNINGS
            .iter()
            .map(|k| Channel {
                drive: 0,
                detuning: k * dh,
            })
            .collect();
        channels.push(at_rest(0));
        channels.extend((0..nv).map(|v| at_rest(v + 1)));
        let mut states = vec![TwoLevelState::ground(); channels.len()];
        self.integrate(traj, up, &spec.variants, &channels, &mut states)?;
        let rabi_up = states[0].excited_probability();
        let u0_up = states[4];
        let u_up: Vec<Complex64> = states[5..].iter().map(|s| s.c_e).collect();

        let gap = down.t_start - up.t_end;
        let mut base: Vec<TwoLevelState> = states[..4]
            .iter()
            .zip(&channels)
            .map(|(s, c)| crate::dynamics::free_evolution(*s, gap, c.detuning))
            .collect();
        channels.truncate(4);
        // fresh δ = 0 columns for the downward operator
        channels.push(at_rest(0));
        channels.push(at_rest(0));
        channels.extend((0..nv).map(|v| at_rest(v + 1)));
        base.push(TwoLevelState::ground());
        base.push(TwoLevelState::excited());
        base.extend(std::iter::repeat(TwoLevelState::ground()).take(nv));
        self.integrate(traj, down, &spec.variants, &channels, &mut base)?;

        let p0 = [
            base[0].excited_probability(),
            base[1].excited_probability(),
            base[2].excited_probability(),
            base[3].excited_probability(),
        ];
        let u0d_from_g = base[4];
        let u0d_from_e = base[5];
        let x0 = u0d_from_g.c_e * u0_up.c_g;
        let y0 = u0d_from_e.c_e * u0_up.c_e;
        let (tu, td) = traj
            .midplane_times(&self.config.geometry)
            .unwrap_or((up.t_start, down.t_start));
        let slope = 2.0 * (x0.conj() * y0).re * (dh * (td - tu)).sin();
        let mut dp = Vec::with_capacity(nv);
        for v in 0..nv {
            let phi_up = phase_relative(u_up[v], u0_up.c_e)?;
            let phi_down = phase_relative(base[6 + v].c_e, u0d_from_g.c_e)?;
            dp.push(slope * (phi_down - phi_up));
        }
        Ok(TrajectoryRecord {
            status: Status::Survived,
            detection: None,
            p0,
            dp,
            rabi_up,
            rabi_down: u0d_from_g.c_e.norm_sqr(),
        })
    }
}
