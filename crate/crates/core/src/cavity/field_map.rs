use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::FieldError;

/// Azimuthal parity of a perturbation component: `g_m cos(mφ)` or
/// `g_m sin(mφ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Cos,
    Sin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub rho_nodes: Vec<f64>,
    pub z_nodes: Vec<f64>,
}

impl Grid {
    pub fn n_rho(&self) -> usize {
        self.rho_nodes.len()
    }

    pub fn n_z(&self) -> usize {
        self.z_nodes.len()
    }

    pub fn len(&self) -> usize {
        self.n_rho() * self.n_z()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major node index: rows are radial nodes, columns axial nodes.
    #[inline]
    pub fn index(&self, i_rho: usize, i_z: usize) -> usize {
        i_rho * self.n_z() + i_z
    }

    /// Evenly spaced lattice over `[0, rho_max] × [0, z_max]`.
    pub fn uniform(rho_max: f64, n_rho: usize, z_max: f64, n_z: usize) -> Self {
        let lin = |max: f64, n: usize| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    if i + 1 == n {
                        max
                    } else {
                        max * i as f64 / (n - 1) as f64
                    }
                })
                .collect()
        };
        Self {
            rho_nodes: lin(rho_max, n_rho),
            z_nodes: lin(z_max, n_z),
        }
    }
}

/// One perturbation component `g_{m,z}(ρ, z)` sampled on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GComponent {
    pub m: u32,
    pub parity: Parity,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl GComponent {
    fn max_abs(&self) -> f64 {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(r, i)| r.hypot(*i))
            .fold(0.0, f64::max)
    }
}

/// Gridded field components on the `(ρ, z)` half-plane of the cavity body.
///
/// On disk this is a single JSON document:
///
/// ```json
/// {
///   "grid": { "rho_nodes": [...], "z_nodes": [...] },
///   "h0z": [...],
///   "g": [ { "m": 1, "parity": "cos", "re": [...], "im": [...] } ],
///   "meta": { }
/// }
/// ```
///
/// All 2D arrays are flattened row-major with the radial index outermost
/// (`index = i_rho * n_z + i_z`). `h0z` is optional; without it the analytic
/// TE₀₁₁ standing wave is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldMap {
    pub grid: Grid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h0z: Option<Vec<f64>>,
    #[serde(default)]
    pub g: Vec<GComponent>,
    #[serde(default)]
    pub meta: serde_json::Value,
}

/// Relative magnitude of `g` above which the field is no longer perturbative.
pub const PERTURBATIVE_RATIO: f64 = 1e-2;

const AXIS_TOLERANCE: f64 = 1e-9;

impl FieldMap {
    /// A map with no perturbation components (`g ≡ 0`).
    pub fn empty(grid: Grid) -> Self {
        Self {
            grid,
            h0z: None,
            g: Vec::new(),
            meta: serde_json::Value::Null,
        }
    }

    pub fn component(&self, m: u32, parity: Parity) -> Option<&GComponent> {
        self.g.iter().find(|c| c.m == m && c.parity == parity)
    }

    pub fn max_g(&self) -> f64 {
        self.g.iter().map(GComponent::max_abs).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        let grid = &self.grid;
        check_nodes("rho_nodes", &grid.rho_nodes)?;
        check_nodes("z_nodes", &grid.z_nodes)?;
        if grid.rho_nodes[0] != 0.0 {
            return Err(FieldError::Parse(format!(
                "rho_nodes must start on the axis (0.0), got {}",
                grid.rho_nodes[0]
            )));
        }
        let n = grid.len();
        if let Some(h0) = &self.h0z {
            if h0.len() != n {
                return Err(FieldError::Parse(format!(
                    "h0z has {} values, grid has {n} nodes",
                    h0.len()
                )));
            }
            if h0.iter().any(|v| !v.is_finite()) {
                return Err(FieldError::Parse("h0z contains non-finite values".into()));
            }
        }
        let mut seen = Vec::new();
        for c in &self.g {
            if c.m > 2 {
                return Err(FieldError::Parse(format!(
                    "component m={} not supported (m ∈ {{0, 1, 2}})",
                    c.m
                )));
            }
            if c.m == 0 && c.parity == Parity::Sin {
                return Err(FieldError::Parse("m=0 has no sine-parity component".into()));
            }
            if seen.contains(&(c.m, c.parity)) {
                return Err(FieldError::Parse(format!(
                    "duplicate component m={} parity={:?}",
                    c.m, c.parity
                )));
            }
            seen.push((c.m, c.parity));
            if c.re.len() != n || c.im.len() != n {
                return Err(FieldError::Parse(format!(
                    "component m={} {:?}: expected {n} values in re and im",
                    c.m, c.parity
                )));
            }
            if c.re.iter().chain(&c.im).any(|v| !v.is_finite()) {
                return Err(FieldError::Parse(format!(
                    "component m={} {:?} contains non-finite values",
                    c.m, c.parity
                )));
            }
            self.check_axis_scaling(c)?;
        }

        let h0_peak = self
            .h0z
            .as_ref()
            .map(|h| h.iter().fold(0.0_f64, |a, v| a.max(v.abs())))
            .unwrap_or(1.0);
        let ratio = self.max_g() / h0_peak;
        if ratio > PERTURBATIVE_RATIO {
            log::warn!(
                "field map max|g|/max|H0| = {ratio:.3e} exceeds {PERTURBATIVE_RATIO:e}; outside the perturbative regime"
            );
        }
        Ok(())
    }

    /// `g_m / ρ^m` must stay finite as `ρ → 0`: the axis column vanishes for
    /// `m ≥ 1`, and for `m = 2` the two innermost reduced columns agree.
    fn check_axis_scaling(&self, c: &GComponent) -> Result<(), FieldError> {
        if c.m == 0 {
            return Ok(());
        }
        let grid = &self.grid;
        let scale = c.max_abs();
        if scale == 0.0 {
            return Ok(());
        }
        for iz in 0..grid.n_z() {
            let k = grid.index(0, iz);
            let v = c.re[k].hypot(c.im[k]);
            if v > AXIS_TOLERANCE * scale {
                return Err(FieldError::InvariantViolation {
                    m: c.m,
                    rho: 0.0,
                    z: grid.z_nodes[iz],
                    detail: format!(
                        "|g| = {v:.3e} on the axis; g_{} must vanish as ρ^{}",
                        c.m, c.m
                    ),
                });
            }
        }
        if c.m == 2 && grid.n_rho() >= 3 {
            let (r1, r2) = (grid.rho_nodes[1], grid.rho_nodes[2]);
            let reduced_scale = scale / grid.rho_nodes[grid.n_rho() - 1].powi(2);
            for iz in 0..grid.n_z() {
                let red = |ir: usize, rho: f64| {
                    let k = grid.index(ir, iz);
                    (c.re[k] / (rho * rho), c.im[k] / (rho * rho))
                };
                let (a_re, a_im) = red(1, r1);
                let (b_re, b_im) = red(2, r2);
                let diff = (a_re - b_re).hypot(a_im - b_im);
                let mag = a_re.hypot(a_im).max(b_re.hypot(b_im));
                if diff > 0.25 * mag + AXIS_TOLERANCE * reduced_scale {
                    return Err(FieldError::InvariantViolation {
                        m: 2,
                        rho: r1,
                        z: grid.z_nodes[iz],
                        detail: "g_2/ρ² is not consistent between the innermost columns".into(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, FieldError> {
        serde_json::to_string(self).map_err(|e| FieldError::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, FieldError> {
        let map: FieldMap = serde_json::from_str(text).map_err(|e| {
            FieldError::Parse(format!("line {} column {}: {e}", e.line(), e.column()))
        })?;
        map.validate()?;
        Ok(map)
    }
}

fn check_nodes(name: &str, nodes: &[f64]) -> Result<(), FieldError> {
    if nodes.len() < 2 {
        return Err(FieldError::Parse(format!("{name} needs at least two nodes")));
    }
    if nodes.iter().any(|v| !v.is_finite()) {
        return Err(FieldError::Parse(format!("{name} contains non-finite values")));
    }
    if nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FieldError::Parse(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

pub fn save_field_map(map: &FieldMap, path: &Path) -> Result<(), FieldError> {
    fs::write(path, map.to_json()?).map_err(|e| FieldError::Io(format!("{}: {e}", path.display())))
}

pub fn load_field_map(path: &Path) -> Result<FieldMap, FieldError> {
    let text = fs::read_to_string(path)
        .map_err(|e| FieldError::Io(format!("{}: {e}", path.display())))?;
    FieldMap::from_json(&text)
}
