//! Weighted least-squares fits and bracketed root finding.

use serde::{Deserialize, Serialize};

use super::ExperimentError;

/// One measured point `(x, y ± σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
}

/// `1/σ²` weights, or unit weights (flagged `false`) if any `σ` is not
/// positive; unit-weight fits take their scale from the residuals.
fn weights(points: &[Point]) -> (Vec<f64>, bool) {
    if points.iter().all(|p| p.sigma > 0.0 && p.sigma.is_finite()) {
        (points.iter().map(|p| 1.0 / (p.sigma * p.sigma)).collect(), true)
    } else {
        (vec![1.0; points.len()], false)
    }
}

fn residual_scale(known: bool, chi2: f64, dof: usize) -> f64 {
    if known || dof == 0 {
        1.0
    } else {
        chi2 / dof as f64
    }
}

fn fit_failed(reason: impl Into<String>, points: &[Point]) -> ExperimentError {
    ExperimentError::FitFailed {
        reason: reason.into(),
        points: points.iter().map(|p| [p.x, p.y, p.sigma]).collect(),
    }
}

/// `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    /// Covariance of `(intercept, slope)`.
    pub covariance: [[f64; 2]; 2],
    pub chi2: f64,
    pub dof: usize,
}

impl LinearFit {
    /// Weighted fit with `1/σ²` weights; unit weights if any `σ` is zero.
    pub fn fit(points: &[Point]) -> Result<Self, ExperimentError> {
        if points.len() < 2 {
            return Err(fit_failed("a line needs at least 2 points", points));
        }
        let (w, known) = weights(points);
        let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (p, w) in points.iter().zip(&w) {
            s += w;
            sx += w * p.x;
            sy += w * p.y;
            sxx += w * p.x * p.x;
            sxy += w * p.x * p.y;
        }
        let det = s * sxx - sx * sx;
        if !(det.abs() > 1e-300) || !det.is_finite() {
            return Err(fit_failed("singular normal equations", points));
        }
        let intercept = (sxx * sy - sx * sxy) / det;
        let slope = (s * sxy - sx * sy) / det;
        let chi2 = points
            .iter()
            .zip(&w)
            .map(|(p, w)| w * (p.y - intercept - slope * p.x).powi(2))
            .sum();
        let dof = points.len() - 2;
        let k = residual_scale(known, chi2, dof);
        Ok(Self {
            intercept,
            slope,
            covariance: [
                [k * sxx / det, -k * sx / det],
                [-k * sx / det, k * s / det],
            ],
            chi2,
            dof,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }

    pub fn slope_error(&self) -> f64 {
        self.covariance[1][1].sqrt()
    }

    pub fn intercept_error(&self) -> f64 {
        self.covariance[0][0].sqrt()
    }

    /// `x₀ = −a/b` with its delta-method standard error.
    pub fn zero_crossing(&self) -> Option<(f64, f64)> {
        if self.slope == 0.0 {
            return None;
        }
        let x0 = -self.intercept / self.slope;
        let c = &self.covariance;
        let var = (c[0][0] + x0 * x0 * c[1][1] + 2.0 * x0 * c[0][1]) / (self.slope * self.slope);
        Some((x0, var.max(0.0).sqrt()))
    }

    /// Largest deviation from the line relative to the largest fitted value.
    pub fn linearity_residual(&self, points: &[Point]) -> f64 {
        let scale = points
            .iter()
            .map(|p| self.eval(p.x).abs())
            .fold(0.0, f64::max);
        let dev = points
            .iter()
            .map(|p| (p.y - self.eval(p.x)).abs())
            .fold(0.0, f64::max);
        dev / scale
    }
}

/// `y = A tan(x/2)`, linearized through the origin in `t = tan(x/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TanFit {
    pub amplitude: f64,
    pub amplitude_error: f64,
    pub chi2: f64,
    pub dof: usize,
}

impl TanFit {
    pub fn fit(points: &[Point]) -> Result<Self, ExperimentError> {
        if points.iter().any(|p| (p.x / 2.0).cos().abs() < 1e-9) {
            return Err(fit_failed("tan(x/2) is singular at x = ±π", points));
        }
        let (w, known) = weights(points);
        let (mut stt, mut sty) = (0.0, 0.0);
        for (p, w) in points.iter().zip(&w) {
            let t = (p.x / 2.0).tan();
            stt += w * t * t;
            sty += w * t * p.y;
        }
        if !(stt > 0.0) {
            return Err(fit_failed("no point with tan(x/2) ≠ 0", points));
        }
        let amplitude = sty / stt;
        let chi2 = points
            .iter()
            .zip(&w)
            .map(|(p, w)| w * (p.y - amplitude * (p.x / 2.0).tan()).powi(2))
            .sum();
        let dof = points.len().saturating_sub(1);
        Ok(Self {
            amplitude,
            amplitude_error: (residual_scale(known, chi2, dof) / stt).sqrt(),
            chi2,
            dof,
        })
    }
}

/// `|y| = c·|x|^p`, fitted as a line in log-log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub exponent_error: f64,
    pub prefactor: f64,
}

impl PowerLawFit {
    pub fn fit(points: &[Point]) -> Result<Self, ExperimentError> {
        if points.iter().any(|p| p.x == 0.0 || p.y == 0.0) {
            return Err(fit_failed("power law needs nonzero x and y", points));
        }
        let logs: Vec<Point> = points
            .iter()
            .map(|p| Point {
                x: p.x.abs().ln(),
                y: p.y.abs().ln(),
                sigma: p.sigma / p.y.abs(),
            })
            .collect();
        let line = LinearFit::fit(&logs).map_err(|_| fit_failed("degenerate log-log fit", points))?;
        Ok(Self {
            exponent: line.slope,
            exponent_error: line.slope_error(),
            prefactor: line.intercept.exp(),
        })
    }
}

/// Result of [`find_root`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub x: f64,
    pub value: f64,
    /// Every evaluation `(x, f(x))` in call order.
    pub evaluations: Vec<[f64; 2]>,
}

/// Root of `f` in `[lo, hi]` by bisection with secant refinement, to an
/// absolute tolerance `tol` in `x`.
///
/// `f` must change sign over the bracket.
pub fn find_root<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<Root, ExperimentError>
where
    F: FnMut(f64) -> Result<f64, ExperimentError>,
{
    let mut evals = Vec::new();
    let mut call = |x: f64, evals: &mut Vec<[f64; 2]>| -> Result<f64, ExperimentError> {
        let y = f(x)?;
        if !y.is_finite() {
            return Err(ExperimentError::NonFinite(format!("objective at {x} is {y}")));
        }
        evals.push([x, y]);
        Ok(y)
    };
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut fa = call(a, &mut evals)?;
    let mut fb = call(b, &mut evals)?;
    if fa == 0.0 {
        return Ok(Root { x: a, value: 0.0, evaluations: evals });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, value: 0.0, evaluations: evals });
    }
    if fa.signum() == fb.signum() {
        return Err(ExperimentError::NoSignChange { scan: evals });
    }
    let mut use_secant = true;
    for _ in 0..200 {
        if b - a < tol {
            break;
        }
        let width = b - a;
        let mut x = if use_secant { b - fb * width / (fb - fa) } else { 0.5 * (a + b) };
        let margin = 0.05 * width;
        if !(x > a + margin && x < b - margin) {
            x = 0.5 * (a + b);
        }
        let fx = call(x, &mut evals)?;
        if fx == 0.0 {
            return Ok(Root { x, value: 0.0, evaluations: evals });
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        if use_secant && b - a >= tol {
            // probe just across the secant estimate to try to close the bracket
            let toward_b = b - x > x - a;
            let probe = if toward_b { x + 0.5 * tol } else { x - 0.5 * tol };
            let fp = call(probe, &mut evals)?;
            if fp == 0.0 {
                return Ok(Root { x: probe, value: 0.0, evaluations: evals });
            }
            if fp.signum() == fa.signum() {
                a = probe;
                fa = fp;
            } else {
                b = probe;
                fb = fp;
            }
            use_secant = b - a < 0.5 * width;
        } else {
            use_secant = true;
        }
    }
    if b - a < tol {
        let (x, value) = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
        return Ok(Root { x, value, evaluations: evals });
    }
    Err(ExperimentError::NonFinite("root finding did not converge".into()))
}
