//! Command-line driver for the `tfe-core` simulations.
//!
//! Each subcommand reads one JSON config (all fields optional), writes CSV
//! tables and SVG plots to an output directory, and finishes with a
//! `manifest.json` that hashes every artifact.

// `!(x > 0.0)` style checks are used on purpose so NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;

pub use config::RunConfig;
pub use error::CliError;

use output::{Manifest, OutputDir, UnitConversion, MANIFEST_SCHEMA};

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Parser)]
#[command(name = "tfe", version, about = "Time-frequency entanglement measurement by sum-frequency generation")]
pub struct Cli {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// RNG seed, overriding the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory, overriding the config (default `out/<experiment>`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub experiment: Experiment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Experiment {
    /// Pump spectrum of the up-converted pair, numeric and closed form.
    SfgSpectrum,
    /// Up-conversion probability over a (Δω, Δt) grid per σ₋.
    SdcSweep,
    /// Monte Carlo superdense-coding receiver.
    SdcRun,
    /// Quantum illumination detection probabilities and hypothesis tests.
    QiRun,
    /// Schmidt spectrum of the Gaussian source.
    Schmidt,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::SfgSpectrum => "sfg-spectrum",
            Experiment::SdcSweep => "sdc-sweep",
            Experiment::SdcRun => "sdc-run",
            Experiment::QiRun => "qi-run",
            Experiment::Schmidt => "schmidt",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub experiment: Experiment,
    pub out_dir: PathBuf,
    pub manifest: PathBuf,
    pub results: serde_json::Value,
}

pub fn run(cli: &Cli) -> Result<RunReport, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = Some(seed);
    }
    let out_dir = cli
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| Path::new(DEFAULT_OUT).join(cli.experiment.name()));
    run_experiment(cli.experiment, &config, &out_dir)
}

/// Runs one experiment and writes its artifacts and manifest into `out_dir`.
pub fn run_experiment(experiment: Experiment, config: &RunConfig, out_dir: &Path) -> Result<RunReport, CliError> {
    let seed = config.seed.unwrap_or(DEFAULT_SEED);
    // validate everything before touching the filesystem
    let plan = commands::plan(experiment, config)?;
    let mut out = OutputDir::create(out_dir)?;
    let results = commands::execute(plan, seed, &mut out)?;

    let mut echo = config.clone();
    echo.seed = Some(seed);
    echo.output_dir = None;
    let units = config.source.units;
    let manifest = Manifest {
        manifest_schema: MANIFEST_SCHEMA,
        config_schema: config::CONFIG_SCHEMA,
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: experiment.name(),
        seed,
        units: UnitConversion {
            input: units.label(),
            canonical: "rad/ps",
            factor: units.factor(),
        },
        config: serde_json::to_value(&echo).map_err(|e| CliError::Computation(format!("config echo: {e}")))?,
        results: results.clone(),
        artifacts: Vec::new(),
    };
    let manifest = out.finish(manifest)?;
    Ok(RunReport {
        experiment,
        out_dir: out_dir.to_path_buf(),
        manifest,
        results,
    })
}
