//! Subcommand implementations. Each experiment is validated into a plan
//! first, so a bad config fails before any file is written.

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::OutputDir;
use crate::Experiment;

pub mod qi;
pub mod schmidt;
pub mod sdc;
pub mod sfg;

/// CSV schema version shared by every table the tool writes.
pub const CSV_SCHEMA: u32 = 1;

pub enum Plan {
    SfgSpectrum(sfg::SfgPlan),
    SdcSweep(sdc::SweepPlan),
    SdcRun(sdc::RunPlan),
    QiRun(qi::QiPlan),
    Schmidt(schmidt::SchmidtPlan),
}

pub fn plan(experiment: Experiment, config: &RunConfig) -> Result<Plan, CliError> {
    Ok(match experiment {
        Experiment::SfgSpectrum => Plan::SfgSpectrum(sfg::SfgPlan::new(config)?),
        Experiment::SdcSweep => Plan::SdcSweep(sdc::SweepPlan::new(config)?),
        Experiment::SdcRun => Plan::SdcRun(sdc::RunPlan::new(config)?),
        Experiment::QiRun => Plan::QiRun(qi::QiPlan::new(config)?),
        Experiment::Schmidt => Plan::Schmidt(schmidt::SchmidtPlan::new(config)?),
    })
}

pub fn execute(plan: Plan, seed: u64, out: &mut OutputDir) -> Result<serde_json::Value, CliError> {
    match plan {
        Plan::SfgSpectrum(p) => p.run(out),
        Plan::SdcSweep(p) => p.run(out),
        Plan::SdcRun(p) => p.run(seed, out),
        Plan::QiRun(p) => p.run(seed, out),
        Plan::Schmidt(p) => p.run(out),
    }
}

/// Relative difference against a reference value.
pub(crate) fn rel_diff(x: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        x.abs()
    } else {
        ((x - reference) / reference).abs()
    }
}
