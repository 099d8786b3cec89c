//! Configuration, orchestration and persistence for the `kubo-lattice` tool.
//!
//! A run is described by a TOML file (see [`config::RunConfig`]); flags and
//! the [`OUTPUT_DIR_ENV`] variable override it, flags taking precedence.
//! Every run writes a deterministic `summary.json`, one CSV per table and a
//! separate `provenance.json` holding the version, timestamp and wall time.

pub mod config;
pub mod convergence;
pub mod error;
pub mod output;
pub mod run;

use std::path::PathBuf;
use std::time::{Instant, SystemTime};

pub use config::{parse_config, Computation, RunConfig, UnitsFlag};
pub use convergence::{convergence_report, SweepParameter};
pub use error::CliError;
pub use output::{write_atomic, write_outputs, Provenance};
pub use run::{run, RunResult, Table};

/// Environment variable overriding `output.directory`.
pub const OUTPUT_DIR_ENV: &str = "KUBO_LATTICE_OUTPUT_DIR";

/// One command-line invocation, with the environment already resolved.
#[derive(Debug, Clone, Default)]
pub struct Invocation {
    pub computation: Option<Computation>,
    pub config_path: PathBuf,
    pub units: Option<UnitsFlag>,
    pub output_dir: Option<PathBuf>,
    /// `dotted.key=value` config overrides.
    pub overrides: Vec<String>,
    /// Value of [`OUTPUT_DIR_ENV`], if set.
    pub env_output_dir: Option<PathBuf>,
    pub sweep: Option<(SweepParameter, Vec<f64>)>,
}

/// Reads the config file and applies overrides: file, then environment, then flags.
pub fn load_config(inv: &Invocation) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(&inv.config_path).map_err(|e| CliError::io(&inv.config_path, e))?;
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    config::apply_overrides(&mut table, &inv.overrides)?;
    let mut cfg = config::from_table(table)?;
    if let Some(dir) = &inv.env_output_dir {
        cfg.output.directory = dir.clone();
    }
    if let Some(dir) = &inv.output_dir {
        cfg.output.directory = dir.clone();
    }
    if let Some(u) = inv.units {
        cfg.output.units = u;
    }
    if let Some(c) = inv.computation {
        cfg.computation = Some(c);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Loads, runs and persists; returns the files written.
pub fn execute(inv: &Invocation) -> Result<Vec<PathBuf>, CliError> {
    let cfg = load_config(inv)?;
    let started = SystemTime::now();
    let clock = Instant::now();
    let result = run(&cfg)?;
    let dir = cfg.output.directory.clone();
    let mut written = write_outputs(&result, &dir, &Provenance::new(&result, started, clock.elapsed()))?;
    if let Some((param, values)) = &inv.sweep {
        let table = convergence_report(&cfg, *param, values)?;
        let path = dir.join("convergence.csv");
        write_atomic(&path, table.to_csv().as_bytes())?;
        written.push(path);
    }
    Ok(written)
}
