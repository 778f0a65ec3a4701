//! JSON configuration files: schema, parsing, merging over presets and
//! default reporting.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::ConfigError;
use crate::cavity::{CavityGeometry, FeedConfig};
use crate::dynamics::IntegratorSettings;
use crate::experiments::{Scenario, Study};
use crate::montecarlo::{
    ApertureStack, CloudModel, DetectionProfile, DriveConfig, EstimatorConfig, FieldSource,
    SimulationConfig, TiltVector,
};

/// Marker key identifying a result sidecar used as a configuration.
pub const SIDECAR_FORMAT: &str = "dcp-sim-sidecar/1";

/// Top-level configuration file. Every section is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub geometry: CavityGeometry,
    pub field: FieldSource,
    pub feeds: FeedConfig,
    pub cloud: CloudModel,
    pub tilt: TiltVector,
    pub apertures: Option<ApertureStack>,
    pub detection: DetectionProfile,
    pub drive: DriveConfig,
    pub integrator: IntegratorSettings,
    pub estimator: EstimatorConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Study>,
}

impl ConfigFile {
    pub fn simulation(&self) -> SimulationConfig {
        SimulationConfig {
            geometry: self.geometry.clone(),
            field: self.field.clone(),
            feeds: self.feeds.clone(),
            cloud: self.cloud.clone(),
            tilt: self.tilt,
            apertures: self.apertures.clone(),
            detection: self.detection.clone(),
            drive: self.drive.clone(),
            integrator: self.integrator,
            estimator: self.estimator.clone(),
        }
    }

    pub fn from_parts(config: &SimulationConfig, sweep: Option<Study>) -> Self {
        Self {
            geometry: config.geometry.clone(),
            field: config.field.clone(),
            feeds: config.feeds.clone(),
            cloud: config.cloud.clone(),
            tilt: config.tilt,
            apertures: config.apertures.clone(),
            detection: config.detection.clone(),
            drive: config.drive.clone(),
            integrator: config.integrator,
            estimator: config.estimator.clone(),
            sweep,
        }
    }
}

/// What a `--config` file turned out to contain.
#[derive(Debug, Clone, PartialEq)]
pub enum ParsedConfig {
    /// A configuration file, with the raw JSON for merging and default
    /// reporting.
    File { config: ConfigFile, raw: Value },
    /// A previous run's sidecar: replay its embedded scenario.
    Sidecar(Box<Scenario>),
}

fn syntax_error(e: &serde_json::Error) -> ConfigError {
    ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Deserialize with the JSON path of the offending key in the error.
pub fn from_str_with_path<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ConfigError::Schema {
            path,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })
}

/// Parse configuration text; schema checks only.
pub fn parse_config_str(text: &str) -> Result<ParsedConfig, ConfigError> {
    let raw: Value = serde_json::from_str(text).map_err(|e| syntax_error(&e))?;
    if !raw.is_object() {
        return Err(ConfigError::Schema {
            path: ".".into(),
            line: 1,
            column: 1,
            message: "top level must be a JSON object".into(),
        });
    }
    if raw.get("format").and_then(Value::as_str) == Some(SIDECAR_FORMAT) {
        let scenario = raw.get("scenario").cloned().ok_or_else(|| ConfigError::Schema {
            path: "scenario".into(),
            line: 0,
            column: 0,
            message: "sidecar has no embedded scenario".into(),
        })?;
        let text = scenario.to_string();
        let scenario: Scenario = from_str_with_path(&text).map_err(|e| e.within("scenario"))?;
        return Ok(ParsedConfig::Sidecar(Box::new(scenario)));
    }
    let config: ConfigFile = from_str_with_path(text)?;
    Ok(ParsedConfig::File { config, raw })
}

/// Read, parse and validate a configuration file.
pub fn parse_config(path: &Path) -> Result<ParsedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let parsed = parse_config_str(&text)?;
    match &parsed {
        ParsedConfig::File { config, .. } => {
            config
                .simulation()
                .validate()
                .map_err(|e| ConfigError::Invariant(e.to_string()))?;
            if let Some(s) = &config.sweep {
                s.validate().map_err(|e| ConfigError::Invariant(e.to_string()))?;
            }
        }
        ParsedConfig::Sidecar(s) => s.validate().map_err(|e| ConfigError::Invariant(e.to_string()))?,
    }
    Ok(parsed)
}

/// Overlay `patch` onto `base`. Objects merge key by key, anything else is
/// replaced; a tagged object whose `source` changes is replaced whole.
pub fn merge_json(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            let retagged = matches!(
                (b.get("source"), p.get("source")),
                (Some(x), Some(y)) if x != y
            );
            if retagged {
                *b = p.clone();
                return;
            }
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) => merge_json(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}

/// Dotted paths of leaves present in `effective` but absent from `given`.
pub fn defaulted_keys(effective: &Value, given: &Value) -> Vec<(String, Value)> {
    fn walk(prefix: &str, eff: &Value, given: Option<&Value>, out: &mut Vec<(String, Value)>) {
        match eff {
            Value::Object(map) if !map.is_empty() => {
                for (k, v) in map {
                    let path = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&path, v, given.and_then(|g| g.get(k)), out);
                }
            }
            _ => {
                if given.is_none() {
                    out.push((prefix.to_string(), eff.clone()));
                }
            }
        }
    }
    let mut out = Vec::new();
    walk("", effective, Some(given), &mut out);
    out
}

/// Simulation configuration from `base` overlaid with a parsed file.
pub fn merged_simulation(
    base: &SimulationConfig,
    raw: &Value,
) -> Result<SimulationConfig, ConfigError> {
    let mut value = serde_json::to_value(base).expect("configuration serializes");
    let mut patch = raw.clone();
    if let Value::Object(m) = &mut patch {
        m.remove("sweep");
    }
    merge_json(&mut value, &patch);
    let text = value.to_string();
    let cfg: SimulationConfig = from_str_with_path(&text)?;
    cfg.validate().map_err(|e| ConfigError::Invariant(e.to_string()))?;
    Ok(cfg)
}

/// Log every key of `effective` that the file did not set.
pub fn log_defaults(effective: &SimulationConfig, raw: &Value, source: &str) {
    let eff = serde_json::to_value(effective).expect("configuration serializes");
    for (path, v) in defaulted_keys(&eff, raw) {
        log::info!("{source} value for {path} = {v}");
    }
}
