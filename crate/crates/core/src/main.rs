use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use dcp_core::cli::{run, RunManifest};
use dcp_core::experiments::{list_presets, preset, ALIASES};
use dcp_core::montecarlo::default_workers;

/// Monte Carlo simulator of distributed cavity phase shifts in fountain
/// clocks.
#[derive(Debug, Parser)]
#[command(name = "dcp-sim", version)]
struct Args {
    /// JSON configuration file, or a sidecar from a previous run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset to run (see --list-scenarios).
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Trajectories per Monte Carlo pass.
    #[arg(long)]
    samples: Option<usize>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    output: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    /// Replace existing output files.
    #[arg(long)]
    overwrite: bool,
    #[arg(long)]
    list_scenarios: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Info)
        .init();

    if args.list_scenarios {
        for (name, description) in list_presets() {
            println!("{name:<12} {description}");
        }
        for (alias, target) in ALIASES {
            match preset(alias) {
                Ok(s) if s.name != target => println!("{alias:<12} {} (part of {target})", s.description),
                _ => println!("{alias:<12} alias of {target}"),
            }
        }
        return ExitCode::SUCCESS;
    }

    let manifest = RunManifest {
        config_path: args.config,
        scenario: args.scenario,
        seed: args.seed,
        samples: args.samples,
        output_dir: args.output,
        workers: args.workers.unwrap_or_else(default_workers).max(1),
        overwrite: args.overwrite,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    match run(&manifest) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.category().exit_code() as u8)
        }
    }
}
