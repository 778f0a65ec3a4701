//! Command-line plumbing: configuration files, run manifests, scenario
//! resolution and the CSV/JSON writers.
//!
//! Exit codes: `0` success, `1` configuration or usage error, `2` numerical
//! failure, `3` I/O error.

mod config;
mod output;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{
    defaulted_keys, from_str_with_path, log_defaults, merge_json, merged_simulation, parse_config,
    parse_config_str, ConfigFile, ParsedConfig, SIDECAR_FORMAT,
};
pub use output::{csv_string, format_float, read_sidecar, Sidecar, REFUSED};

use crate::experiments::{preset, run_scenario, Scenario, SweepResult, DEFAULT_SEED};
use crate::montecarlo::RunConfig;
use crate::{Error, ErrorCategory};

/// Sample count for configurations that do not start from a preset.
pub const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("JSON syntax error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema violation at '{path}' (line {line}, column {column}): {message}")]
    Schema {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Invariant(String),
    #[error("{0}")]
    Usage(String),
}

impl ConfigError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            ConfigError::Io { .. } => ErrorCategory::Io,
            _ => ErrorCategory::Config,
        }
    }

    /// Prefix schema paths with `prefix`.
    pub fn within(self, prefix: &str) -> Self {
        match self {
            ConfigError::Schema {
                path,
                line,
                column,
                message,
            } => ConfigError::Schema {
                path: if path == "." {
                    prefix.to_string()
                } else {
                    format!("{prefix}.{path}")
                },
                line,
                column,
                message,
            },
            other => other,
        }
    }
}

/// Everything that identifies one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_path: Option<PathBuf>,
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub output_dir: PathBuf,
    /// Thread-count hint; results do not depend on it.
    pub workers: usize,
    pub overwrite: bool,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(output_dir: impl Into<PathBuf>) -> Self {
        Self {
            config_path: None,
            scenario: None,
            seed: None,
            samples: None,
            output_dir: output_dir.into(),
            workers: 1,
            overwrite: false,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Files written by a run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub scenario: Scenario,
    pub result: SweepResult,
    pub csv_path: PathBuf,
    pub sidecar_path: PathBuf,
}

/// Build the effective scenario: a preset or sidecar, overlaid with the
/// configuration file and the seed and sample flags.
pub fn resolve_scenario(manifest: &RunManifest) -> Result<Scenario, Error> {
    let parsed = match &manifest.config_path {
        Some(p) => Some(parse_config(p)?),
        None => None,
    };
    let mut scenario = match parsed {
        Some(ParsedConfig::Sidecar(s)) => {
            if let Some(name) = &manifest.scenario {
                if *name != s.name {
                    return Err(ConfigError::Usage(format!(
                        "the sidecar replays scenario '{}', not '{name}'",
                        s.name
                    ))
                    .into());
                }
            }
            log::info!("replaying scenario '{}' from sidecar", s.name);
            *s
        }
        Some(ParsedConfig::File { config, raw }) => match &manifest.scenario {
            Some(name) => {
                let mut s = preset(name)?;
                s.base.config = merged_simulation(&s.base.config, &raw)?;
                log_defaults(&s.base.config, &raw, &format!("preset '{name}'"));
                if let Some(study) = config.sweep {
                    s.study = study;
                }
                s
            }
            None => {
                let study = config.sweep.clone().ok_or_else(|| {
                    ConfigError::Usage(
                        "the configuration has no sweep section; pass --scenario".into(),
                    )
                })?;
                let cfg = config.simulation();
                log_defaults(&cfg, &raw, "default");
                Scenario {
                    name: manifest
                        .config_path
                        .as_deref()
                        .and_then(Path::file_stem)
                        .map_or("custom".into(), |s| s.to_string_lossy().into_owned()),
                    description: String::new(),
                    base: RunConfig {
                        config: cfg,
                        samples: DEFAULT_SAMPLES,
                        seed: DEFAULT_SEED,
                    },
                    study,
                }
            }
        },
        None => match &manifest.scenario {
            Some(name) => preset(name)?,
            None => {
                return Err(ConfigError::Usage(
                    "nothing to run: pass --scenario or --config".into(),
                )
                .into())
            }
        },
    };
    if let Some(seed) = manifest.seed {
        scenario.base.seed = seed;
    }
    if let Some(n) = manifest.samples {
        scenario.base.samples = n;
    }
    scenario
        .validate()
        .map_err(|e| match e.category() {
            ErrorCategory::Config => Error::Config(ConfigError::Invariant(e.to_string())),
            _ => e.into(),
        })?;
    Ok(scenario)
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Resolve, run and write `{output}/{scenario}.csv` with its JSON sidecar.
pub fn run(manifest: &RunManifest) -> Result<RunOutcome, Error> {
    let scenario = resolve_scenario(manifest)?;
    let csv_path = manifest.output_dir.join(format!("{}.csv", scenario.name));
    let sidecar_path = manifest.output_dir.join(format!("{}.json", scenario.name));
    if !manifest.overwrite {
        for p in [&csv_path, &sidecar_path] {
            if p.exists() {
                return Err(Error::Io(format!(
                    "{} exists; pass --overwrite to replace it",
                    p.display()
                )));
            }
        }
    }
    std::fs::create_dir_all(&manifest.output_dir).map_err(|e| io_error(&manifest.output_dir, e))?;

    log::info!(
        "running '{}': {} samples per pass, seed {}, {} workers",
        scenario.name,
        scenario.base.samples,
        scenario.base.seed,
        manifest.workers
    );
    let result = run_scenario(&scenario, manifest.workers)?;
    for f in &result.fits {
        let params: Vec<String> = f
            .parameters
            .iter()
            .map(|p| format!("{} = {:e} ± {:.2e}", p.name, p.value, p.std_error))
            .collect();
        log::info!("fit {}: {}", f.column, params.join(", "));
    }

    let csv = csv_string(&result)?;
    std::fs::write(&csv_path, &csv).map_err(|e| io_error(&csv_path, e))?;
    let sidecar = Sidecar::new(manifest, &scenario, &result, &csv);
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    std::fs::write(&sidecar_path, json).map_err(|e| io_error(&sidecar_path, e))?;
    log::info!(
        "wrote {} and {} in {:.1} s",
        csv_path.display(),
        sidecar_path.display(),
        result.metadata.elapsed_seconds
    );
    Ok(RunOutcome {
        scenario,
        result,
        csv_path,
        sidecar_path,
    })
}
