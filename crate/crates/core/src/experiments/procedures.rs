//! Operational procedures: feed balancing and zero-tilt finding.

use serde::{Deserialize, Serialize};

use super::fit::{find_root, LinearFit, Point};
use super::scenario::only_feed;
use super::ExperimentError;
use crate::cavity::FeedConfig;
use crate::montecarlo::{
    ratio_combination, Engine, EstimationError, PassResult, PassSpec, RatioEstimate, RunConfig,
    SimulationConfig, UnitSums,
};

/// Relative root tolerance, as a fraction of the bracket width.
pub const ROOT_TOLERANCE: f64 = 1e-4;

fn conversion(pass: &PassResult, cfg: &SimulationConfig) -> Result<f64, ExperimentError> {
    let c = pass.contrast(&cfg.detection)?;
    if !(c >= cfg.estimator.contrast_floor) {
        return Err(ExperimentError::Estimation(EstimationError::Degenerate(format!(
            "contrast {c} below the conversion floor"
        ))));
    }
    Ok(2.0 * pass.timing.linewidth / (std::f64::consts::PI * c * cfg.geometry.clock_frequency))
}

/// One pass at `tilt_parallel`, returning `(δν/ν per δP, unit sums)` for
/// each coefficient set.
fn tilted_pass(
    run: &RunConfig,
    tilt: f64,
    variants: &[FeedConfig],
    combos: &[&[(usize, f64)]],
    workers: usize,
) -> Result<(f64, Vec<UnitSums>), ExperimentError> {
    let mut cfg = run.config.clone();
    cfg.tilt.parallel = tilt;
    let spec = PassSpec {
        variants: variants.iter().map(FeedConfig::weights).collect(),
        rabi: false,
    };
    let pass = Engine::new(&cfg)?.run(&spec, run.samples, run.seed, workers)?;
    let k = conversion(&pass, &cfg)?;
    let sums = combos
        .iter()
        .map(|c| pass.delta_p_sums(&cfg.detection, c))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((k, sums))
}

fn combine(terms: &[(f64, &UnitSums)]) -> Result<RatioEstimate, ExperimentError> {
    ratio_combination(terms).ok_or_else(|| EstimationError::NoSurvivors.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BalanceOptions {
    /// Probe tilt `θ`: sensitivity is `(δν(+θ) − δν(−θ))/2θ` (rad).
    pub probe_tilt: f64,
    /// Bracket for the amplitude ratio `a_π/a₀`.
    pub ratio_bracket: [f64; 2],
}

impl Default for BalanceOptions {
    fn default() -> Self {
        Self {
            probe_tilt: 1.6e-3,
            ratio_bracket: [0.5, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceResult {
    /// Amplitude ratio `a_π/a₀` nulling the tilt sensitivity.
    pub ratio: f64,
    /// Residual `d(δν/ν)/dθ` at the returned ratio (per rad).
    pub residual_sensitivity: RatioEstimate,
    /// Sensitivity with only the φ = 0 feed driven (per rad).
    pub single_feed_sensitivity: RatioEstimate,
    /// Residual in units of 10⁻¹⁶ per mrad.
    pub residual_per_mrad_e16: f64,
    /// `(ratio, sensitivity)` of every root-finder evaluation.
    pub evaluations: Vec<[f64; 2]>,
}

fn ratio_feeds(base: &FeedConfig, ratio: f64) -> FeedConfig {
    let mut f = FeedConfig::with_amplitude_ratio(ratio);
    f.feeds[0].g_coupling = only_feed(base, 0.0).feeds[0].g_coupling;
    f.feeds[1].g_coupling = only_feed(base, std::f64::consts::PI).feeds[0].g_coupling;
    f.normalized_detuning = base.normalized_detuning;
    f.wall_loss_sin_amplitude = base.wall_loss_sin_amplitude;
    f
}

fn sensitivity(
    run: &RunConfig,
    variants: &[FeedConfig],
    variant: usize,
    theta: f64,
    workers: usize,
) -> Result<RatioEstimate, ExperimentError> {
    let combo: &[(usize, f64)] = &[(variant, 1.0)];
    let (kp, sp) = tilted_pass(run, theta, variants, &[combo], workers)?;
    let (km, sm) = tilted_pass(run, -theta, variants, &[combo], workers)?;
    let s = 0.5 / theta;
    combine(&[(s * kp, &sp[0]), (-s * km, &sm[0])])
}

/// Find the feed amplitude ratio `a_π/a₀` for which the clock frequency at
/// `b = 1` does not depend on tilt along the feeds.
pub fn balance_feeds(
    run: &RunConfig,
    options: &BalanceOptions,
    workers: usize,
) -> Result<BalanceResult, ExperimentError> {
    let theta = options.probe_tilt;
    if !(theta > 0.0) {
        return Err(ExperimentError::InvalidScenario("probe_tilt must be > 0".into()));
    }
    let [lo, hi] = options.ratio_bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(ExperimentError::InvalidScenario(
            "ratio_bracket must satisfy 0 < lo < hi".into(),
        ));
    }
    let mut run = run.clone();
    run.config.drive.b = 1.0;
    let base_feeds = run.config.feeds.clone();
    let root = find_root(
        |r| {
            let v = [ratio_feeds(&base_feeds, r)];
            log::info!("balance: ratio {r:.6}");
            Ok(sensitivity(&run, &v, 0, theta, workers)?.value)
        },
        lo,
        hi,
        ROOT_TOLERANCE * (hi - lo),
    )?;
    let variants = [ratio_feeds(&base_feeds, root.x), only_feed(&base_feeds, 0.0)];
    let residual = sensitivity(&run, &variants, 0, theta, workers)?;
    let single = sensitivity(&run, &variants, 1, theta, workers)?;
    Ok(BalanceResult {
        ratio: root.x,
        residual_sensitivity: residual,
        single_feed_sensitivity: single,
        residual_per_mrad_e16: residual.value * 1e-3 / 1e-16,
        evaluations: root.evaluations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZeroTiltOptions {
    /// Scan half-span (rad).
    pub span: f64,
    /// Scan points across `[−span, span]`.
    pub points: usize,
}

impl Default for ZeroTiltOptions {
    fn default() -> Self {
        Self {
            span: 1.6e-3,
            points: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroTiltResult {
    /// Commanded tilt where `ν₀ = ν_π` (rad).
    pub tilt: f64,
    /// Uncertainty from the linear-fit covariance (rad).
    pub std_error: f64,
    /// Zero crossing of the linear fit (rad).
    pub fit_crossing: f64,
    /// Fitted `d(ν₀ − ν_π)/ν / dθ` (per rad).
    pub slope: f64,
    /// Scan points `(tilt, ν₀ − ν_π, σ)`.
    pub scan: Vec<[f64; 3]>,
    /// Root-finder evaluations `(tilt, ν₀ − ν_π)`.
    pub evaluations: Vec<[f64; 2]>,
}

/// Commanded parallel tilt at which feeding from either side gives the same
/// clock frequency, at the configured `b`.
pub fn find_zero_tilt(
    run: &RunConfig,
    options: &ZeroTiltOptions,
    workers: usize,
) -> Result<ZeroTiltResult, ExperimentError> {
    if !(options.span > 0.0) || options.points < 2 {
        return Err(ExperimentError::InvalidScenario(
            "zero-tilt scan needs span > 0 and at least 2 points".into(),
        ));
    }
    let feeds = &run.config.feeds;
    let variants = [only_feed(feeds, 0.0), only_feed(feeds, std::f64::consts::PI)];
    let combo: &[(usize, f64)] = &[(0, 1.0), (1, -1.0)];
    let difference = |tilt: f64| -> Result<RatioEstimate, ExperimentError> {
        let (k, sums) = tilted_pass(run, tilt, &variants, &[combo], workers)?;
        combine(&[(k, &sums[0])])
    };
    let n = options.points;
    let mut scan = Vec::with_capacity(n);
    for i in 0..n {
        let t = -options.span + 2.0 * options.span * i as f64 / (n - 1) as f64;
        let d = difference(t)?;
        log::info!("zero tilt scan: {t:.3e} rad -> {:.3e}", d.value);
        scan.push([t, d.value, d.std_error]);
    }
    let points: Vec<Point> = scan
        .iter()
        .map(|p| Point { x: p[0], y: p[1], sigma: p[2] })
        .collect();
    let fit = LinearFit::fit(&points)?;
    let (fit_crossing, std_error) = fit.zero_crossing().ok_or_else(|| ExperimentError::FitFailed {
        reason: "zero slope".into(),
        points: scan.clone(),
    })?;
    let bracket = scan
        .windows(2)
        .find(|w| w[0][1].signum() != w[1][1].signum())
        .map(|w| (w[0][0], w[1][0]))
        .ok_or_else(|| ExperimentError::NoSignChange {
            scan: scan.iter().map(|p| [p[0], p[1]]).collect(),
        })?;
    let root = find_root(
        |t| Ok(difference(t)?.value),
        bracket.0,
        bracket.1,
        ROOT_TOLERANCE * 2.0 * options.span,
    )?;
    Ok(ZeroTiltResult {
        tilt: root.x,
        std_error,
        fit_crossing,
        slope: fit.slope,
        scan,
        evaluations: root.evaluations,
    })
}
