//! CSV tables and JSON sidecars.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ConfigError, RunManifest, SIDECAR_FORMAT};
use crate::experiments::{Cell, Scenario, SweepResult};
use crate::Error;

/// Cell text for a conversion refused below the contrast floor.
pub const REFUSED: &str = "refused";

/// Shortest text that round-trips `x`, positional or exponential.
pub fn format_float(x: f64) -> String {
    let plain = format!("{x}");
    let exp = format!("{x:e}");
    if exp.len() < plain.len() {
        exp
    } else {
        plain
    }
}

fn cell_text(v: Option<f64>) -> String {
    v.map_or_else(|| REFUSED.to_string(), format_float)
}

/// The result table: the swept parameter, then each observable followed by
/// its standard error.
pub fn csv_string(result: &SweepResult) -> Result<String, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    let mut header = vec![result.parameter.label().to_string()];
    for c in &result.columns {
        header.push(c.name.clone());
        header.push(format!("{}_se", c.name));
    }
    w.write_record(&header).map_err(csv_err)?;
    for (x, row) in result.values.iter().zip(&result.rows) {
        let mut rec = vec![format_float(*x)];
        for &Cell { value, std_error } in row {
            rec.push(cell_text(value));
            rec.push(cell_text(std_error));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV is UTF-8"))
}

/// Provenance written next to every CSV. Passing it back as `--config`
/// replays the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub manifest: RunManifest,
    pub scenario: Scenario,
    pub result: SweepResult,
    pub csv_sha256: String,
}

impl Sidecar {
    pub fn new(manifest: &RunManifest, scenario: &Scenario, result: &SweepResult, csv: &str) -> Self {
        Self {
            format: SIDECAR_FORMAT.to_string(),
            manifest: manifest.clone(),
            scenario: scenario.clone(),
            result: result.clone(),
            csv_sha256: hex::encode(Sha256::digest(csv.as_bytes())),
        }
    }
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let s: Sidecar = super::from_str_with_path(&text)?;
    if s.format != SIDECAR_FORMAT {
        return Err(ConfigError::Invariant(format!("unknown sidecar format '{}'", s.format)).into());
    }
    Ok(s)
}
