use serde::{Deserialize, Serialize};

use super::config::DetectionProfile;
use super::engine::{NominalTiming, Status, TrajectoryRecord};
use super::trajectory::detection_weight_at;
use super::EstimationError;
use crate::dynamics::fringe_contrast;

/// Monte Carlo estimate of one observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Trajectories sampled, including those cut or flagged.
    pub n_samples: usize,
    pub n_survived: usize,
    pub n_aperture_cut: usize,
    pub n_flagged: usize,
    pub seed: u64,
    /// SHA-256 of the effective configuration, sample count and seed.
    pub config_digest: String,
}

/// A weighted ratio `Σ N_u / Σ D_u` over estimator units with its
/// linearized standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Sum in a fixed pairwise order so results do not depend on scheduling.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Ratio estimator over units: `R = ΣN/ΣD`,
/// `SE² = n/(n−1) · Σ(N_u − R D_u)² / (ΣD)²`.
pub fn ratio_estimate(num: &[f64], den: &[f64]) -> Option<RatioEstimate> {
    assert_eq!(num.len(), den.len());
    let n = num.len();
    let sd = pairwise_sum(den);
    if !(sd.abs() > 0.0) {
        return None;
    }
    let r = pairwise_sum(num) / sd;
    let resid: Vec<f64> = num
        .iter()
        .zip(den)
        .map(|(a, b)| (a - r * b).powi(2))
        .collect();
    let se = if n > 1 {
        (n as f64 / (n - 1) as f64 * pairwise_sum(&resid)).sqrt() / sd.abs()
    } else {
        f64::INFINITY
    };
    Some(RatioEstimate {
        value: r,
        std_error: se,
    })
}

/// Per-unit numerator and denominator sums of one ratio estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitSums {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

/// `Σ_k c_k R_k` over ratio estimators sharing the same units, with the
/// linearized standard error
/// `SE² = n/(n−1) · Σ_u (Σ_k c_k (N_ku − R_k D_ku)/ΣD_k)²`.
pub fn ratio_combination(terms: &[(f64, &UnitSums)]) -> Option<RatioEstimate> {
    let n = terms.first()?.1.num.len();
    let mut value = 0.0;
    let mut resid = vec![0.0; n];
    for &(c, s) in terms {
        assert_eq!(s.num.len(), n);
        assert_eq!(s.den.len(), n);
        let sd = pairwise_sum(&s.den);
        if !(sd.abs() > 0.0) {
            return None;
        }
        let r = pairwise_sum(&s.num) / sd;
        value += c * r;
        for (e, (a, b)) in resid.iter_mut().zip(s.num.iter().zip(&s.den)) {
            *e += c * (a - r * b) / sd;
        }
    }
    let sq: Vec<f64> = resid.iter().map(|e| e * e).collect();
    let std_error = if n > 1 {
        (n as f64 / (n - 1) as f64 * pairwise_sum(&sq)).sqrt()
    } else {
        f64::INFINITY
    };
    Some(RatioEstimate { value, std_error })
}

/// Per-trajectory records of one pass, grouped into estimator units.
#[derive(Debug, Clone)]
pub struct PassResult {
    pub units: Vec<Vec<TrajectoryRecord>>,
    pub n_variants: usize,
    pub timing: NominalTiming,
    pub rabi_scale: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Sample accounting of a pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counts {
    pub samples: usize,
    pub survived: usize,
    pub cut: usize,
    pub flagged: usize,
}

impl PassResult {
    pub fn new(
        units: Vec<Vec<TrajectoryRecord>>,
        n_variants: usize,
        timing: NominalTiming,
        rabi_scale: f64,
        samples: usize,
        seed: u64,
    ) -> Self {
        Self {
            units,
            n_variants,
            timing,
            rabi_scale,
            samples,
            seed,
        }
    }

    pub fn records(&self) -> impl Iterator<Item = &TrajectoryRecord> {
        self.units.iter().flatten()
    }

    pub fn counts(&self) -> Counts {
        let mut c = Counts {
            samples: 0,
            survived: 0,
            cut: 0,
            flagged: 0,
        };
        for r in self.records() {
            c.samples += 1;
            match r.status {
                Status::Survived => c.survived += 1,
                Status::Cut => c.cut += 1,
                Status::Flagged => c.flagged += 1,
            }
        }
        c
    }

    fn weight(r: &TrajectoryRecord, det: &DetectionProfile) -> f64 {
        match (r.status, r.detection) {
            (Status::Survived, Some(xy)) => detection_weight_at(xy, det),
            _ => 0.0,
        }
    }

    /// `Σ_i w_i f(record_i)` for every unit.
    pub fn unit_sums(
        &self,
        det: &DetectionProfile,
        f: impl Fn(&TrajectoryRecord) -> f64,
    ) -> Vec<f64> {
        self.units
            .iter()
            .map(|u| {
                u.iter()
                    .map(|r| {
                        let w = Self::weight(r, det);
                        if w > 0.0 {
                            w * f(r)
                        } else {
                            0.0
                        }
                    })
                    .sum()
            })
            .collect()
    }

    pub fn unit_weights(&self, det: &DetectionProfile) -> Vec<f64> {
        self.unit_sums(det, |_| 1.0)
    }

    /// Weighted mean of a per-trajectory quantity.
    pub fn mean_of(
        &self,
        det: &DetectionProfile,
        f: impl Fn(&TrajectoryRecord) -> f64,
    ) -> Result<RatioEstimate, EstimationError> {
        ratio_estimate(&self.unit_sums(det, f), &self.unit_weights(det))
            .ok_or(EstimationError::NoSurvivors)
    }

    /// Weighted mean of `Σ_v c_v δP_v`.
    pub fn delta_p_combination(
        &self,
        det: &DetectionProfile,
        coefs: &[(usize, f64)],
    ) -> Result<RatioEstimate, EstimationError> {
        self.check_variants(coefs)?;
        self.mean_of(det, |r| coefs.iter().map(|&(v, c)| c * r.dp[v]).sum())
    }

    /// `Σ_v a_v δP_v / Σ_v b_v δP_v` with a ratio-estimator error.
    pub fn delta_p_ratio(
        &self,
        det: &DetectionProfile,
        num: &[(usize, f64)],
        den: &[(usize, f64)],
    ) -> Result<RatioEstimate, EstimationError> {
        self.check_variants(num)?;
        self.check_variants(den)?;
        let comb = |coefs: &[(usize, f64)]| {
            self.unit_sums(det, |r| coefs.iter().map(|&(v, c)| c * r.dp[v]).sum())
        };
        ratio_estimate(&comb(num), &comb(den)).ok_or_else(|| {
            EstimationError::Degenerate("denominator of the δP ratio is zero".into())
        })
    }

    fn check_variants(&self, coefs: &[(usize, f64)]) -> Result<(), EstimationError> {
        match coefs.iter().find(|(v, _)| *v >= self.n_variants) {
            Some((v, _)) => Err(EstimationError::InvalidConfig(format!(
                "variant {v} not evaluated in this pass ({} variants)",
                self.n_variants
            ))),
            None => Ok(()),
        }
    }

    /// Unit sums of the weighted `Σ_v c_v δP_v`.
    pub fn delta_p_sums(
        &self,
        det: &DetectionProfile,
        coefs: &[(usize, f64)],
    ) -> Result<UnitSums, EstimationError> {
        self.check_variants(coefs)?;
        Ok(UnitSums {
            num: self.unit_sums(det, |r| coefs.iter().map(|&(v, c)| c * r.dp[v]).sum()),
            den: self.unit_weights(det),
        })
    }

    /// Unit sums of the baseline excitation at detuning index `k`.
    pub fn baseline_sums(&self, det: &DetectionProfile, k: usize) -> UnitSums {
        UnitSums {
            num: self.unit_sums(det, |r| r.p0[k]),
            den: self.unit_weights(det),
        }
    }

    /// Fringe contrast with the standard error of the difference between the
    /// extreme fringe points.
    pub fn contrast_estimate(&self, det: &DetectionProfile) -> Result<RatioEstimate, EstimationError> {
        let f = self.fringe(det)?;
        let hi = (0..4).fold(0, |a, k| if f[k] > f[a] { k } else { a });
        let lo = (0..4).fold(0, |a, k| if f[k] < f[a] { k } else { a });
        let (h, l) = (self.baseline_sums(det, hi), self.baseline_sums(det, lo));
        let mut r = ratio_combination(&[(1.0, &h), (-1.0, &l)]).ok_or(EstimationError::NoSurvivors)?;
        r.value = fringe_contrast(&f);
        Ok(r)
    }

    /// Ensemble baseline fringe at the baseline detunings.
    pub fn fringe(&self, det: &DetectionProfile) -> Result<[f64; 4], EstimationError> {
        let w = pairwise_sum(&self.unit_weights(det));
        if !(w > 0.0) {
            return Err(EstimationError::NoSurvivors);
        }
        let mut out = [0.0; 4];
        for (k, o) in out.iter_mut().enumerate() {
            *o = pairwise_sum(&self.unit_sums(det, |r| r.p0[k])) / w;
        }
        Ok(out)
    }

    pub fn contrast(&self, det: &DetectionProfile) -> Result<f64, EstimationError> {
        Ok(fringe_contrast(&self.fringe(det)?))
    }

    /// Single-passage excitation probabilities `(up, down)`.
    pub fn rabi(&self, det: &DetectionProfile) -> Result<(f64, f64), EstimationError> {
        let up = self.mean_of(det, |r| r.rabi_up)?.value;
        let down = self.mean_of(det, |r| r.rabi_down)?.value;
        Ok((up, down))
    }

    /// Package an estimate with this pass's sample accounting.
    pub fn shift_estimate(&self, r: RatioEstimate, digest: &str) -> ShiftEstimate {
        let c = self.counts();
        ShiftEstimate {
            mean: r.value,
            std_error: r.std_error,
            n_samples: c.samples,
            n_survived: c.survived,
            n_aperture_cut: c.cut,
            n_flagged: c.flagged,
            seed: self.seed,
            config_digest: digest.to_string(),
        }
    }
}
