//! End-to-end acceptance checks, one line per criterion.
//!
//! Run a subset with `cargo test --test acceptance -- 3 7`.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use dcp_core::cavity::FeedConfig;
use dcp_core::constants::CS_CLOCK_FREQUENCY;
use dcp_core::dynamics::{
    free_evolution, propagate_pulse, shift_from_delta_p, IntegratorSettings, PulseDrive,
    TwoLevelState, DEFAULT_CONTRAST_FLOOR,
};
use dcp_core::experiments::{
    amplitude_grid, preset, run_scenario, Measurement, Point, PowerLawFit, Scenario, Series,
    Study, SweepParameter, SweepResult, PRESETS,
};
use dcp_core::montecarlo::{
    default_workers, DetectionProfile, Engine, FieldSource, Method, NormalizationMeasure,
    PassSpec, SimulationConfig, Status, Trajectory,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn study(parameter: SweepParameter, values: Vec<f64>, measurements: Vec<Measurement>) -> Study {
    Study {
        parameter,
        values,
        series: None,
        cases: Vec::new(),
        measurements,
        fit: None,
        differential: None,
    }
}

fn run(s: &Scenario) -> Result<SweepResult, String> {
    run_scenario(s, default_workers()).map_err(|e| e.to_string())
}

fn cells(r: &SweepResult, column: &str) -> Result<Vec<(f64, f64)>, String> {
    let col = r.column(column).ok_or_else(|| format!("no column {column}"))?;
    col.iter()
        .map(|c| match (c.value, c.std_error) {
            (Some(v), Some(s)) => Ok((v, s)),
            _ => Err(format!("{column} has a refused cell")),
        })
        .collect()
}

fn conversion_identity() -> Check {
    let shift = shift_from_delta_p(7e-8, 1.0, 0.822, CS_CLOCK_FREQUENCY, DEFAULT_CONTRAST_FLOOR)
        .map_err(|e| e.to_string())?;
    let rel = (shift / 4e-18 - 1.0).abs();
    verdict(rel <= 0.05, format!("δν/ν = {shift:.4e}, {:.1}% from 4e-18", 100.0 * rel))
}

fn real_field_null() -> Check {
    let mut worst: f64 = 0.0;
    let mut counts = Vec::new();
    for b in [1.0, 2.0, 4.0, 5.0] {
        let mut cfg = SimulationConfig::default();
        cfg.field = FieldSource::None;
        cfg.integrator.max_area_per_step = 1e-2;
        cfg.tilt.parallel = 1.6e-3;
        cfg.drive.b = b;
        let engine = Engine::new(&cfg).map_err(|e| e.to_string())?;
        let spec = PassSpec {
            variants: [FeedConfig::single(0.0), FeedConfig::phase_imbalanced(1.0)]
                .iter()
                .map(FeedConfig::weights)
                .collect(),
            rabi: false,
        };
        let mut survived = 0;
        let mut seed = 1;
        while survived < 10_000 {
            let pass = engine
                .run(&spec, 10_000 - survived, seed, default_workers())
                .map_err(|e| e.to_string())?;
            for r in pass.records().filter(|r| r.status == Status::Survived) {
                survived += 1;
                worst = r.dp.iter().fold(worst, |w, d| w.max(d.abs()));
            }
            seed += 1;
        }
        counts.push(survived);
    }
    verdict(
        worst < 1e-12,
        format!("max |δP| = {worst:.1e} over {counts:?} surviving trajectories"),
    )
}

fn tan_law() -> Check {
    let mut s = preset("fig3").map_err(|e| e.to_string())?;
    s.base.samples = 100_000;
    let r = run(&s)?;
    let mut notes = Vec::new();
    let mut ok = true;
    for d in [-0.25, 0.25] {
        let col = format!("normalized_response@detuning={d}");
        let fit = r.fit(&col).ok_or("missing tan fit")?;
        let a = fit.parameter("amplitude").ok_or("missing amplitude")?;
        let rel = (a.value / d - 1.0).abs();
        ok &= rel <= 0.02;
        notes.push(format!("A({d}) = {:.5} ± {:.1e}", a.value, a.std_error));
    }
    let flat = cells(&r, "normalized_response@detuning=0")?;
    let worst = flat
        .iter()
        .map(|&(v, se)| if se > 0.0 { v.abs() / se } else if v == 0.0 { 0.0 } else { f64::INFINITY })
        .fold(0.0, f64::max);
    ok &= worst <= 3.0;
    notes.push(format!("Δω/Γ = 0 curve within {worst:.2}σ of zero"));
    verdict(ok, notes.join(", "))
}

fn tilt_linearity() -> Check {
    let mut s = preset("fig1b").map_err(|e| e.to_string())?;
    s.base.samples = 32_000;
    s.study.values = vec![-1.6e-3, -0.8e-3, 0.0, 0.8e-3, 1.6e-3];
    let r = run(&s)?;
    let mut ok = true;
    let mut notes = Vec::new();
    let mut crossings = Vec::new();
    for b in [1, 3, 5, 7] {
        let col = format!("nu0_minus_nupi@b={b}");
        let y = cells(&r, &col)?;
        let n = y.len();
        let odd = (0..n / 2 + 1)
            .map(|i| {
                let (a, sa) = y[i];
                let (c, sc) = y[n - 1 - i];
                let sum = if i == n - 1 - i { a } else { a + c };
                let se = if i == n - 1 - i { sa } else { sa.hypot(sc) };
                sum.abs() / se
            })
            .fold(0.0, f64::max);
        let fit = r.fit(&col).ok_or("missing linear fit")?;
        let resid = fit.linearity_residual.ok_or("missing residual")?;
        let [x0, sx0] = fit.zero_crossing.ok_or("missing zero crossing")?;
        ok &= odd <= 3.0 && resid <= 0.02;
        crossings.push((b, x0, sx0));
        notes.push(format!("b={b}: odd {odd:.1}σ, nonlinearity {:.2}%", 100.0 * resid));
    }
    let mut spread: f64 = 0.0;
    for (i, a) in crossings.iter().enumerate() {
        for c in &crossings[i + 1..] {
            spread = spread.max((a.1 - c.1).abs() / a.2.hypot(c.2));
        }
    }
    ok &= spread <= 3.0;
    let zs: Vec<String> = crossings
        .iter()
        .map(|(b, x, s)| format!("{b}:{:.1}±{:.1}", 1e6 * x, 1e6 * s))
        .collect();
    notes.push(format!("zero crossings µrad {} agree within {spread:.2}σ", zs.join(" ")));
    verdict(ok, notes.join("; "))
}

fn m0_amplitude_structure() -> Check {
    let mut thermal = preset("fig2a").map_err(|e| e.to_string())?;
    thermal.study = study(SweepParameter::B, vec![1.0, 2.0, 4.0], vec![Measurement::Shift]);
    let t = cells(&run(&thermal)?, "delta_p")?;
    let (d1, d2, d4) = (t[0].0, t[1].0, t[2].0);
    let significant = d4.abs() > 5.0 * t[2].1;

    let mut cold = preset("fig2a").map_err(|e| e.to_string())?;
    cold.study = study(SweepParameter::B, amplitude_grid(), vec![Measurement::Shift]);
    cold.base.config.cloud.temperature = 0.0;
    cold.base.config.cloud.position_sigma = [0.0; 3];
    cold.base.config.cloud.position_mean[0] = 0.0;
    cold.base.config.cloud.position_mean[1] = 0.0;
    cold.base.samples = 2;
    let c = cells(&run(&cold)?, "delta_p")?;
    let cold_max = c.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    let limit = 1e-3 * d4.abs();

    let ok = significant
        && d4.abs() >= 10.0 * d2.abs()
        && d1.abs() <= 0.1 * d4.abs()
        && cold_max <= limit;
    verdict(
        ok,
        format!(
            "δP(1) = {d1:.2e}, δP(2) = {d2:.2e}, δP(4) = {d4:.2e} ± {:.1e}; \
             cold max |δP| = {cold_max:.1e} (limit {limit:.1e})",
            t[2].1
        ),
    )
}

/// Detection-weighted `⟨cos 2φ⟩` of an isotropic Gaussian at the detection plane.
fn detected_cos2phi(sigma: f64, waist: f64, beam_azimuth: f64) -> f64 {
    let n = 801;
    let half = 8.0 * sigma;
    let h = 2.0 * half / (n - 1) as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        let x = -half + h * i as f64;
        for j in 0..n {
            let y = -half + h * j as f64;
            let across = x * beam_azimuth.sin() - y * beam_azimuth.cos();
            let w = (-(x * x + y * y) / (2.0 * sigma * sigma)).exp()
                * (-2.0 * across * across / (waist * waist)).exp();
            let r2 = x * x + y * y;
            if r2 > 0.0 {
                num += w * (x * x - y * y) / r2;
            }
            den += w;
        }
    }
    num / den
}

fn m2_mechanism() -> Check {
    let base = preset("fig2c").map_err(|e| e.to_string())?;
    let mut notes = Vec::new();

    let mut centred = base.clone();
    centred.base.config.estimator.rotation = false;
    centred.base.config.drive.b = 1.0;
    centred.study = study(SweepParameter::B, vec![1.0], vec![Measurement::Shift]);
    let (v0, s0) = cells(&run(&centred)?, "delta_p")?[0];
    let null_ok = v0.abs() < 3.0 * s0;
    notes.push(format!("centred δP = {v0:.2e} ± {s0:.1e}"));

    let mut offset = base.clone();
    offset.base.samples = 64_000;
    offset.base.config.drive.b = 1.0;
    let offsets = vec![0.5e-3, 1e-3, 1.5e-3, 2e-3];
    offset.study = study(SweepParameter::CloudOffsetX, offsets.clone(), vec![Measurement::Shift]);
    let y = cells(&run(&offset)?, "delta_p")?;
    let points: Vec<Point> = offsets
        .iter()
        .zip(&y)
        .map(|(&x, &(v, s))| Point { x, y: v, sigma: s })
        .collect();
    let same_sign = y.iter().all(|p| p.0.signum() == y[0].0.signum());
    let fit = PowerLawFit::fit(&points).map_err(|e| e.to_string())?;
    let (v2, s2) = *y.last().unwrap();
    let offset_ok = same_sign && v2.abs() > 5.0 * s2 && (fit.exponent - 2.0).abs() <= 0.2;
    notes.push(format!(
        "2 mm δP = {v2:.2e} ± {s2:.1e}, exponent {:.3} ± {:.3}",
        fit.exponent, fit.exponent_error
    ));

    let mut gauss = base.clone();
    gauss.base.samples = 16_000;
    gauss.base.config.drive.b = 1.0;
    gauss.base.config.detection = DetectionProfile::gaussian(9.9e-3);
    gauss.study = study(SweepParameter::B, vec![1.0], vec![Measurement::Shift]);
    let (vg, sg) = cells(&run(&gauss)?, "delta_p")?[0];
    let cloud = &gauss.base.config.cloud;
    let det = &gauss.base.config.detection;
    let (_, t_det) = Trajectory::nominal(cloud)
        .crossing_times(det.plane_z)
        .ok_or("cloud never reaches the detection plane")?;
    let sigma = (cloud.position_sigma[0].powi(2) + (cloud.velocity_sigma() * t_det).powi(2)).sqrt();
    let oracle = detected_cos2phi(sigma, det.waist, det.beam_axis_azimuth);
    let gauss_ok = vg.abs() > 5.0 * sg && vg.signum() == oracle.signum();
    notes.push(format!("Gaussian δP = {vg:.2e} ± {sg:.1e}, oracle ⟨cos 2φ⟩ = {oracle:.3}"));

    verdict(null_ok && offset_ok && gauss_ok, notes.join(", "))
}

fn two_methods() -> Check {
    let fig1b = {
        let mut s = preset("fig1b").map_err(|e| e.to_string())?;
        s.study.values = vec![1.6e-3];
        s.study.series = Some(Series { parameter: SweepParameter::B, values: vec![1.0] });
        s.study.fit = None;
        s
    };
    let fig3 = {
        let mut s = preset("fig3").map_err(|e| e.to_string())?;
        s.study = study(
            SweepParameter::DeltaPsi,
            vec![1.0],
            vec![Measurement::Shift, Measurement::FeedSwap],
        );
        s.study.series = Some(Series {
            parameter: SweepParameter::NormalizedDetuning,
            values: vec![0.25],
        });
        s
    };
    let cases = [
        (fig1b, "delta_p_0_minus_pi@b=1"),
        (fig3.clone(), "delta_p_0_minus_pi@detuning=0.25"),
        (fig3, "delta_p@detuning=0.25"),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (mut s, col) in cases {
        s.base.samples = 4000;
        if let FieldSource::Parametric(m) = &mut s.base.config.field {
            m.g1_amplitude = 1e-4;
        }
        let mut values = [0.0; 2];
        for (k, method) in [Method::FullIntegration, Method::EffectivePhase].into_iter().enumerate() {
            s.base.config.estimator.method = method;
            let (v, se) = cells(&run(&s)?, col)?[0];
            ok &= v.abs() > 5.0 * se;
            values[k] = v;
        }
        let rel = (values[1] / values[0] - 1.0).abs();
        ok &= rel <= 0.05;
        notes.push(format!("{} {col}: {:.1}%", s.name, 100.0 * rel));
    }
    verdict(ok, notes.join(", "))
}

fn dynamics_oracles() -> Check {
    let settings = IntegratorSettings::default();
    let one = |_: f64| Complex64::new(1.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut rabi_err, mut norm_err, mut fringe_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..100 {
        let omega = rng.random_range(50.0..5000.0);
        let detuning = omega * rng.random_range(-2.0..2.0);
        let tau = rng.random_range(0.1..10.0) / omega;
        let drive = PulseDrive { b: 1.0, rabi_scale: omega, detuning };
        let s = propagate_pulse(TwoLevelState::ground(), 0.0, tau, one, &drive, &settings)
            .map_err(|e| e.to_string())?;
        let eff = omega.hypot(detuning);
        let want = (omega / eff).powi(2) * (0.5 * eff * tau).sin().powi(2);
        rabi_err = rabi_err.max((s.excited_probability() - want).abs());
        norm_err = norm_err.max((s.norm_sqr() - 1.0).abs());
    }
    let omega = 1000.0;
    let half_pi = PulseDrive { b: 1.0, rabi_scale: omega, detuning: 0.0 };
    let tau = PI / 2.0 / omega;
    let t_free = 0.5;
    for _ in 0..100 {
        let delta = rng.random_range(-40.0..40.0);
        let pulse = |s| propagate_pulse(s, 0.0, tau, one, &half_pi, &settings);
        let s = pulse(TwoLevelState::ground()).map_err(|e| e.to_string())?;
        norm_err = norm_err.max((s.norm_sqr() - 1.0).abs());
        let s = pulse(free_evolution(s, t_free, delta)).map_err(|e| e.to_string())?;
        norm_err = norm_err.max((s.norm_sqr() - 1.0).abs());
        let want = 0.5 * (1.0 - (delta * t_free).cos());
        fringe_err = fringe_err.max((s.ground_probability() - want).abs());
    }
    verdict(
        rabi_err < 1e-8 && fringe_err < 1e-8 && norm_err < 1e-10,
        format!("Rabi {rabi_err:.1e}, Ramsey fringe {fringe_err:.1e}, norm {norm_err:.1e}"),
    )
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    let mut ok = true;
    for name in PRESETS {
        let mut csv = Vec::new();
        for workers in ["1", "3"] {
            let out = dir.path().join(format!("{name}-{workers}"));
            let o = Command::new(env!("CARGO_BIN_EXE_dcp-sim"))
                .args(["--scenario", name, "--seed", "1234", "--samples", "200"])
                .args(["--workers", workers, "--output"])
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            if !o.status.success() {
                return Err(format!("{name}: {}", String::from_utf8_lossy(&o.stderr)));
            }
            csv.push(std::fs::read(out.join(format!("{name}.csv"))).map_err(|e| e.to_string())?);
        }
        let same = csv[0] == csv[1];
        ok &= same;
        notes.push(format!("{name} {}", if same { "identical" } else { "DIFFERS" }));
    }
    verdict(ok, notes.join(", "))
}

fn contrast_structure() -> Check {
    let mut mono = preset("fig2a").map_err(|e| e.to_string())?;
    let cloud = &mut mono.base.config.cloud;
    cloud.temperature = 0.0;
    cloud.position_sigma = [0.0; 3];
    cloud.position_mean[0] = 0.0;
    cloud.position_mean[1] = 0.0;
    mono.base.config.drive.normalization = NormalizationMeasure::OnAxis;
    mono.base.samples = 2;
    mono.study = study(SweepParameter::B, vec![2.0, 4.0, 6.0, 8.0, 10.0], vec![Measurement::Contrast]);
    let zeros = cells(&run(&mono)?, "contrast")?;
    let worst = zeros.iter().map(|c| c.0.abs()).fold(0.0, f64::max);
    let mut ok = worst < 1e-3;

    let mut thermal = preset("fig2a").map_err(|e| e.to_string())?;
    let step = 0.05;
    let mut maxima = Vec::new();
    for k in [1.0, 3.0, 5.0] {
        let grid: Vec<f64> = (0..=18).map(|i| k - 0.6 + step * i as f64).collect();
        thermal.study = study(SweepParameter::B, grid.clone(), vec![Measurement::Contrast]);
        let c = cells(&run(&thermal)?, "contrast")?;
        let i = (1..c.len() - 1)
            .max_by(|&a, &b| c[a].0.total_cmp(&c[b].0))
            .ok_or("empty grid")?;
        let (l, m, r) = (c[i - 1].0, c[i].0, c[i + 1].0);
        let b_max = grid[i] + 0.5 * step * (l - r) / (l - 2.0 * m + r);
        ok &= b_max > k - 0.5 && b_max < k;
        maxima.push(format!("{b_max:.3}"));
    }
    verdict(
        ok,
        format!(
            "monokinetic C(even b) ≤ {worst:.1e}; thermal maxima at b = {}",
            maxima.join(", ")
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("conversion identity", conversion_identity),
        ("real-field null", real_field_null),
        ("tan law", tan_law),
        ("tilt linearity and common zero", tilt_linearity),
        ("m=0 amplitude structure", m0_amplitude_structure),
        ("m=2 mechanism", m2_mechanism),
        ("two-method agreement", two_methods),
        ("dynamics oracles", dynamics_oracles),
        ("determinism", determinism),
        ("contrast structure", contrast_structure),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {n:>2} {tag} {name} [{:.1} s]: {detail}",
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
