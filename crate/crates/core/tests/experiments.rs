use dcp_core::experiments::{
    find_zero_tilt, preset, run_scenario, Cell, Scenario, SweepResult, ZeroTiltOptions,
};

fn small(name: &str, samples: usize) -> Scenario {
    let mut s = preset(name).unwrap();
    s.base.samples = samples;
    s
}

fn values(r: &SweepResult, column: &str) -> Vec<(f64, f64)> {
    r.column(column)
        .unwrap_or_else(|| panic!("no column {column}"))
        .iter()
        .map(|c: &Cell| (c.value.unwrap(), c.std_error.unwrap()))
        .collect()
}

#[test]
fn phase_imbalance_response_is_odd() {
    let s = small("fig3", 600);
    let r = run_scenario(&s, 1).unwrap();
    let psi = &s.study.values;
    let plus = values(&r, "normalized_response@detuning=0.25");
    let minus = values(&r, "normalized_response@detuning=-0.25");
    let scale = plus.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    // Second-order terms in g break exact oddness at the 1e-4 level.
    let allowance = 1e-3 * scale;
    let n = psi.len();
    for i in 0..n {
        assert!((psi[i] + psi[n - 1 - i]).abs() < 1e-12);
        let (a, sa) = plus[i];
        let (b, sb) = plus[n - 1 - i];
        assert!((a + b).abs() <= 3.0 * sa.hypot(sb) + allowance, "Δψ {}: {a} {b}", psi[i]);
        let (c, sc) = minus[i];
        assert!((a + c).abs() <= 3.0 * sa.hypot(sc) + allowance, "D: {a} {c}");
    }
    for (v, se) in values(&r, "normalized_response@detuning=0") {
        assert!(v.abs() <= 3.0 * se, "{v} {se}");
    }
}

#[test]
fn perpendicular_tilt_needs_wall_losses() {
    let mut s = small("fig1c", 400);
    let with = run_scenario(&s, 1).unwrap();
    let slope = with.fit("frac_shift@b=5").unwrap().parameter("slope").unwrap().clone();
    assert!(slope.value.abs() > 5.0 * slope.std_error, "{slope:?}");
    let s1 = with.fit("frac_shift@b=1").unwrap().parameter("slope").unwrap().value;
    assert!((slope.value - s1).abs() > 0.1 * slope.value.abs());

    s.base.config.feeds.wall_loss_sin_amplitude = 0.0;
    let without = run_scenario(&s, 1).unwrap();
    for col in ["frac_shift@b=1", "frac_shift@b=5", "nu0_minus_nupi@b=5"] {
        for (v, se) in values(&without, col) {
            assert!(v.abs() <= 3.0 * se, "{col}: {v} ± {se}");
        }
    }
}

#[test]
fn scenarios_replay_bit_exactly() {
    let s = small("fig2c", 60);
    let a = run_scenario(&s, 1).unwrap();
    let json = serde_json::to_string(&s).unwrap();
    let back: Scenario = serde_json::from_str(&json).unwrap();
    let b = run_scenario(&back, 2).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.metadata.scenario_digest, b.metadata.scenario_digest);
    assert_eq!(a.metadata.config_digest, b.metadata.config_digest);
}

#[test]
fn offset_cloud_zero_tilt_is_shared_across_amplitudes() {
    let mut crossings = Vec::new();
    for b in [1.0, 3.0] {
        let mut run = small("fig1b", 2000).base;
        run.config.drive.b = b;
        run.config.cloud.position_mean[0] = 1e-3;
        let z = find_zero_tilt(&run, &ZeroTiltOptions::default(), 1).unwrap();
        assert!(z.tilt.abs() > 3.0 * z.std_error, "{z:?}");
        crossings.push((z.tilt, z.std_error));
    }
    let (a, b) = (crossings[0], crossings[1]);
    assert!((a.0 - b.0).abs() < 3.0 * a.1.hypot(b.1), "{crossings:?}");
}

#[test]
fn centred_cloud_has_zero_crossing_at_zero() {
    let run = small("fig1b", 1000).base;
    let z = find_zero_tilt(&run, &ZeroTiltOptions::default(), 1).unwrap();
    assert!(z.tilt.abs() < 3.0 * z.std_error, "{z:?}");
}
