//! Sweep execution: points sharing trajectories are batched into one Monte
//! Carlo pass, and observables are assembled in sweep order.

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::fit::{LinearFit, Point, PowerLawFit, TanFit};
use super::scenario::{only_feed, Case, FitKind, Measurement, Scenario, SweepParameter};
use super::ExperimentError;
use crate::cavity::{CavityField, FeedConfig};
use crate::montecarlo::{
    digest, ratio_combination, DetectionProfile, Engine, EstimationError, NominalTiming,
    PassResult, PassSpec, RatioEstimate, SimulationConfig, UnitSums,
};

/// One table cell: `None` marks a refused conversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub value: Option<f64>,
    pub std_error: Option<f64>,
}

impl Cell {
    fn of(r: RatioEstimate) -> Self {
        Self {
            value: Some(r.value),
            std_error: Some(r.std_error),
        }
    }

    const REFUSED: Cell = Cell {
        value: None,
        std_error: None,
    };
}

/// Identifies one observable column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub observable: String,
    pub case: String,
    /// Series value, when the study has a series.
    pub series: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParameter {
    pub name: String,
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub column: String,
    pub kind: FitKind,
    pub parameters: Vec<FitParameter>,
    /// `[x₀, σ]` for linear fits.
    pub zero_crossing: Option<[f64; 2]>,
    /// Largest deviation relative to the largest fitted value.
    pub linearity_residual: Option<f64>,
    pub points_used: usize,
}

impl FitReport {
    pub fn parameter(&self, name: &str) -> Option<&FitParameter> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub seed: u64,
    pub samples: usize,
    /// SHA-256 of the base run configuration.
    pub config_digest: String,
    /// SHA-256 of the whole scenario.
    pub scenario_digest: String,
    /// Ramsey timing of the base configuration.
    pub timing: NominalTiming,
    pub passes: usize,
    pub elapsed_seconds: f64,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub scenario: String,
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub columns: Vec<Column>,
    /// `rows[i][j]`: sweep value `i`, column `j`.
    pub rows: Vec<Vec<Cell>>,
    pub fits: Vec<FitReport>,
    pub metadata: SweepMetadata,
}

impl SweepResult {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Values and errors of one column, in sweep order.
    pub fn column(&self, name: &str) -> Option<Vec<Cell>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn fit(&self, column: &str) -> Option<&FitReport> {
        self.fits.iter().find(|f| f.column == column)
    }
}

/// Column name `{case}_{observable}@{series}={value}`.
pub fn column_name(case: &str, observable: &str, series: Option<(SweepParameter, f64)>) -> String {
    let mut s = String::new();
    if !case.is_empty() {
        s.push_str(case);
        s.push('_');
    }
    s.push_str(observable);
    if let Some((p, v)) = series {
        s.push_str(&format!("@{}={}", p.label(), v));
    }
    s
}

struct PointSpec {
    config: SimulationConfig,
    group: usize,
    /// Variant index per feed role, filled in while grouping.
    shift: usize,
    only0: usize,
    only_pi: usize,
}

struct Group {
    config: SimulationConfig,
    variants: Vec<FeedConfig>,
    rabi: bool,
}

/// Key over everything that changes trajectories or integration; feeds and
/// detection only enter through variants and aggregation.
fn trajectory_key(cfg: &SimulationConfig) -> String {
    let mut k = cfg.clone();
    k.feeds = FeedConfig::default();
    k.detection = DetectionProfile::default();
    serde_json::to_string(&k).expect("configuration serializes")
}

fn field_key(cfg: &SimulationConfig) -> String {
    serde_json::to_string(&(&cfg.geometry, &cfg.field, cfg.integrator.null_floor))
        .expect("configuration serializes")
}

fn variant_index(list: &mut Vec<FeedConfig>, feeds: FeedConfig) -> usize {
    match list.iter().position(|f| *f == feeds) {
        Some(i) => i,
        None => {
            list.push(feeds);
            list.len() - 1
        }
    }
}

struct Prepared<'a> {
    scenario: &'a Scenario,
    cases: Vec<Case>,
    series: Vec<Option<f64>>,
    /// Indexed `[series][case][value]`, flattened.
    points: Vec<PointSpec>,
    groups: Vec<Group>,
}

impl<'a> Prepared<'a> {
    fn new(scenario: &'a Scenario) -> Result<Self, ExperimentError> {
        scenario.validate()?;
        let study = &scenario.study;
        let cases = if study.cases.is_empty() {
            vec![Case::default()]
        } else {
            study.cases.clone()
        };
        let series: Vec<Option<f64>> = match &study.series {
            Some(s) => s.values.iter().map(|&v| Some(v)).collect(),
            None => vec![None],
        };
        let needs = |m| study.measurements.contains(&m);
        let mut keys: HashMap<String, usize> = HashMap::new();
        let mut groups: Vec<Group> = Vec::new();
        let mut points = Vec::new();
        for s in &series {
            for case in &cases {
                for &v in &study.values {
                    let mut cfg = scenario.base.config.clone();
                    case.apply(&mut cfg);
                    if let (Some(sv), Some(sp)) = (s, &study.series) {
                        sp.parameter.apply(&mut cfg, *sv)?;
                    }
                    study.parameter.apply(&mut cfg, v)?;
                    cfg.validate()?;
                    let key = trajectory_key(&cfg);
                    let g = *keys.entry(key).or_insert_with(|| {
                        groups.push(Group {
                            config: cfg.clone(),
                            variants: Vec::new(),
                            rabi: false,
                        });
                        groups.len() - 1
                    });
                    let group = &mut groups[g];
                    let mut p = PointSpec {
                        config: cfg.clone(),
                        group: g,
                        shift: usize::MAX,
                        only0: usize::MAX,
                        only_pi: usize::MAX,
                    };
                    if needs(Measurement::Shift) || needs(Measurement::PhaseImbalance) {
                        p.shift = variant_index(&mut group.variants, cfg.feeds.clone());
                    }
                    if needs(Measurement::FeedSwap) || needs(Measurement::PhaseImbalance) {
                        p.only0 = variant_index(&mut group.variants, only_feed(&cfg.feeds, 0.0));
                        p.only_pi = variant_index(
                            &mut group.variants,
                            only_feed(&cfg.feeds, std::f64::consts::PI),
                        );
                    }
                    group.rabi |= needs(Measurement::Contrast);
                    points.push(p);
                }
            }
        }
        Ok(Self {
            scenario,
            cases,
            series,
            points,
            groups,
        })
    }

    fn point(&self, s: usize, c: usize, v: usize) -> &PointSpec {
        let nv = self.scenario.study.values.len();
        &self.points[(s * self.cases.len() + c) * nv + v]
    }
}

/// Observables of one point, plus what the differential column needs.
struct PointResult {
    cells: Vec<Cell>,
    shift_sums: Option<UnitSums>,
    /// `δν/ν` per unit `δP`, `None` below the contrast floor.
    conversion: Option<f64>,
}

fn evaluate_point(
    p: &PointSpec,
    pass: &PassResult,
    measurements: &[Measurement],
) -> Result<PointResult, ExperimentError> {
    let cfg = &p.config;
    let det = &cfg.detection;
    let contrast = pass.contrast_estimate(det)?;
    let conversion = (contrast.value >= cfg.estimator.contrast_floor).then(|| {
        2.0 * pass.timing.linewidth
            / (std::f64::consts::PI * contrast.value * cfg.geometry.clock_frequency)
    });
    let scaled = |r: RatioEstimate| match conversion {
        Some(k) => Cell {
            value: Some(k * r.value),
            std_error: Some(k * r.std_error),
        },
        None => Cell::REFUSED,
    };
    let combine = |coefs: &[(usize, f64)]| -> Result<RatioEstimate, ExperimentError> {
        let sums = pass.delta_p_sums(det, coefs)?;
        ratio_combination(&[(1.0, &sums)]).ok_or_else(|| EstimationError::NoSurvivors.into())
    };
    let mut out = PointResult {
        cells: Vec::new(),
        shift_sums: None,
        conversion,
    };
    for m in measurements {
        match m {
            Measurement::Shift => {
                let r = combine(&[(p.shift, 1.0)])?;
                out.cells.push(Cell::of(r));
                out.cells.push(scaled(r));
                out.shift_sums = Some(pass.delta_p_sums(det, &[(p.shift, 1.0)])?);
            }
            Measurement::FeedSwap => {
                let r = combine(&[(p.only0, 1.0), (p.only_pi, -1.0)])?;
                out.cells.push(Cell::of(r));
                out.cells.push(scaled(r));
            }
            Measurement::PhaseImbalance => {
                let r = pass.delta_p_ratio(
                    det,
                    &[(p.shift, 1.0), (p.only0, -0.5), (p.only_pi, -0.5)],
                    &[(p.only0, 1.0), (p.only_pi, -1.0)],
                )?;
                out.cells.push(Cell::of(r));
            }
            Measurement::Contrast => {
                out.cells.push(Cell::of(contrast));
                out.cells.push(Cell::of(pass.mean_of(det, |r| r.rabi_up)?));
                out.cells.push(Cell::of(pass.mean_of(det, |r| r.rabi_down)?));
            }
        }
    }
    Ok(out)
}

fn fit_column(kind: FitKind, column: &str, xs: &[f64], cells: &[Cell]) -> Result<FitReport, ExperimentError> {
    let points: Vec<Point> = xs
        .iter()
        .zip(cells)
        .filter_map(|(&x, c)| {
            Some(Point {
                x,
                y: c.value?,
                sigma: c.std_error.unwrap_or(0.0),
            })
        })
        .collect();
    let param = |name: &str, value: f64, std_error: f64| FitParameter {
        name: name.into(),
        value,
        std_error,
    };
    let mut report = FitReport {
        column: column.to_string(),
        kind,
        parameters: Vec::new(),
        zero_crossing: None,
        linearity_residual: None,
        points_used: points.len(),
    };
    match kind {
        FitKind::Linear => {
            let f = LinearFit::fit(&points)?;
            report.parameters = vec![
                param("intercept", f.intercept, f.intercept_error()),
                param("slope", f.slope, f.slope_error()),
            ];
            report.zero_crossing = f.zero_crossing().map(|(x, s)| [x, s]);
            report.linearity_residual = Some(f.linearity_residual(&points));
        }
        FitKind::Tan => {
            let f = TanFit::fit(&points)?;
            report.parameters = vec![param("amplitude", f.amplitude, f.amplitude_error)];
        }
        FitKind::PowerLaw => {
            let f = PowerLawFit::fit(&points)?;
            report.parameters = vec![
                param("exponent", f.exponent, f.exponent_error),
                param("prefactor", f.prefactor, 0.0),
            ];
        }
    }
    Ok(report)
}

/// Run any scenario on `workers` threads.
pub fn run_scenario(scenario: &Scenario, workers: usize) -> Result<SweepResult, ExperimentError> {
    let start = Instant::now();
    let prep = Prepared::new(scenario)?;
    let study = &scenario.study;
    let base = &scenario.base;

    let mut fields: HashMap<String, CavityField> = HashMap::new();
    let mut passes = Vec::with_capacity(prep.groups.len());
    for (i, g) in prep.groups.iter().enumerate() {
        let fk = field_key(&g.config);
        let field = match fields.get(&fk) {
            Some(f) => f.clone(),
            None => {
                let f = g
                    .config
                    .field
                    .build(&g.config.geometry, g.config.integrator.null_floor)?;
                fields.insert(fk, f.clone());
                f
            }
        };
        let engine = Engine::with_field(&g.config, field)?;
        let spec = PassSpec {
            variants: g.variants.iter().map(FeedConfig::weights).collect(),
            rabi: g.rabi,
        };
        log::info!(
            "{}: pass {}/{} (b = {}, {} variants)",
            scenario.name,
            i + 1,
            prep.groups.len(),
            g.config.drive.b,
            spec.variants.len()
        );
        let pass = engine.run(&spec, base.samples, base.seed, workers)?;
        let c = pass.counts();
        if c.flagged as f64 > g.config.estimator.flagged_warning_fraction * c.samples as f64 {
            log::warn!("{} of {} trajectories flagged at field near-nulls", c.flagged, c.samples);
        }
        passes.push(pass);
    }

    let series_param = study.series.as_ref().map(|s| s.parameter);
    let nv = study.values.len();
    let mut columns = Vec::new();
    let mut rows: Vec<Vec<Cell>> = vec![Vec::new(); nv];
    let mut results: Vec<Vec<Vec<PointResult>>> = Vec::new();
    for (si, s) in prep.series.iter().enumerate() {
        let mut per_case = Vec::new();
        for (ci, case) in prep.cases.iter().enumerate() {
            for m in &study.measurements {
                for obs in m.observables() {
                    columns.push(Column {
                        name: column_name(&case.label, obs, series_param.zip(*s)),
                        observable: obs.to_string(),
                        case: case.label.clone(),
                        series: *s,
                    });
                }
            }
            let mut per_value = Vec::new();
            for (vi, row) in rows.iter_mut().enumerate() {
                let p = prep.point(si, ci, vi);
                let r = evaluate_point(p, &passes[p.group], &study.measurements)?;
                row.extend_from_slice(&r.cells);
                per_value.push(r);
            }
            per_case.push(per_value);
        }
        results.push(per_case);
    }

    if let (Some([hi, lo]), Some(sp)) = (study.differential, &study.series) {
        let idx = |v: f64| sp.values.iter().position(|&x| x == v).expect("validated");
        let (sh, sl) = (idx(hi), idx(lo));
        for (ci, case) in prep.cases.iter().enumerate() {
            let obs = format!("frac_shift_diff({}={hi}-{lo})", sp.parameter.label());
            columns.push(Column {
                name: column_name(&case.label, &obs, None),
                observable: "frac_shift_diff".into(),
                case: case.label.clone(),
                series: None,
            });
            for (vi, row) in rows.iter_mut().enumerate() {
                let (a, b) = (&results[sh][ci][vi], &results[sl][ci][vi]);
                let cell = match (a.conversion, b.conversion, &a.shift_sums, &b.shift_sums) {
                    (Some(ka), Some(kb), Some(na), Some(nb)) => ratio_combination(&[(ka, na), (-kb, nb)])
                        .map_or(Cell::REFUSED, Cell::of),
                    _ => Cell::REFUSED,
                };
                row.push(cell);
            }
        }
    }

    let mut fits = Vec::new();
    if let Some(spec) = &study.fit {
        for (j, col) in columns.iter().enumerate() {
            if col.observable == spec.observable {
                let cells: Vec<Cell> = rows.iter().map(|r| r[j]).collect();
                fits.push(fit_column(spec.kind, &col.name, &study.values, &cells)?);
            }
        }
    }

    let timing = passes[0].timing;
    Ok(SweepResult {
        scenario: scenario.name.clone(),
        parameter: study.parameter,
        values: study.values.clone(),
        columns,
        rows,
        fits,
        metadata: SweepMetadata {
            seed: base.seed,
            samples: base.samples,
            config_digest: digest(base),
            scenario_digest: digest(scenario),
            timing,
            passes: passes.len(),
            elapsed_seconds: start.elapsed().as_secs_f64(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}

fn require(scenario: &Scenario, ok: bool, what: &str) -> Result<(), ExperimentError> {
    if ok {
        Ok(())
    } else {
        Err(ExperimentError::InvalidScenario(format!(
            "scenario '{}' is not {what}",
            scenario.name
        )))
    }
}

/// `δP(b)` and derived observables over microwave amplitudes.
pub fn run_amplitude_sweep(scenario: &Scenario, workers: usize) -> Result<SweepResult, ExperimentError> {
    require(scenario, scenario.study.parameter == SweepParameter::B, "an amplitude sweep")?;
    run_scenario(scenario, workers)
}

/// Observables versus fountain tilt.
pub fn run_tilt_sweep(scenario: &Scenario, workers: usize) -> Result<SweepResult, ExperimentError> {
    require(
        scenario,
        matches!(
            scenario.study.parameter,
            SweepParameter::TiltParallel | SweepParameter::TiltPerpendicular
        ),
        "a tilt sweep",
    )?;
    run_scenario(scenario, workers)
}

/// Normalized response versus feed phase imbalance.
pub fn run_phase_imbalance_scan(scenario: &Scenario, workers: usize) -> Result<SweepResult, ExperimentError> {
    require(
        scenario,
        scenario.study.parameter == SweepParameter::DeltaPsi
            && scenario.study.measurements.contains(&Measurement::PhaseImbalance),
        "a phase-imbalance scan",
    )?;
    run_scenario(scenario, workers)
}
