use std::collections::HashSet;

use serde_json::json;
use tfe_core::qi::{pd_qi_terms, qi_expectation_oracle_with};
use tfe_core::schmidt::schmidt_coefficients;
use tfe_core::{
    gaussian_jsa, pd_ci, pd_ci_matched, pd_qi, run_discrimination, DiscriminationConfig, EncodingShift, JsaGrids,
    NoiseReference, Protocol, QiChannel, QiSource, SchmidtSpectrum, SourceParams, Truncation,
};

use super::CSV_SCHEMA;
use crate::config::{NoiseReferenceConfig, QiSourceConfig, RunConfig, SpectrumSpec};
use crate::error::CliError;
use crate::output::{num, OutputDir};
use crate::plot::{line_plot, Series};

/// Largest allowed |oracle − closed form|.
pub const ORACLE_TOLERANCE: f64 = 1e-8;

pub struct QiPlan {
    sources: Vec<(String, QiSource)>,
    present: QiChannel,
    absent: QiChannel,
    analytic: Vec<QiChannel>,
    block_len: u64,
    blocks: u64,
    oracle_modes: usize,
    reference: NoiseReference,
}

fn build_spectrum(spec: &SpectrumSpec, params: &SourceParams) -> Result<SchmidtSpectrum, CliError> {
    Ok(match spec {
        SpectrumSpec::Lambdas(l) => SchmidtSpectrum::from_lambdas(l.clone())?,
        SpectrumSpec::Uniform(k) => SchmidtSpectrum::uniform(*k)?,
        SpectrumSpec::Geometric { q, modes } => SchmidtSpectrum::geometric(*q, *modes)?,
        SpectrumSpec::Gaussian { grid_points } => {
            let g = JsaGrids::for_source(params, EncodingShift::ZERO, *grid_points)?;
            let s = schmidt_coefficients(&gaussian_jsa(params, &g.signal, &g.idler)?, Truncation::default())?;
            // grid quadrature leaves the total slightly off one
            let total: f64 = s.lambdas().iter().sum();
            SchmidtSpectrum::from_lambdas(s.lambdas().iter().map(|l| l / total).collect())?
        }
    })
}

fn check_name(name: &str, seen: &mut HashSet<String>) -> Result<(), CliError> {
    let ok = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    if !ok {
        return Err(CliError::Validation(format!(
            "source name {name:?} must be non-empty ASCII letters, digits, '_' or '-'"
        )));
    }
    if !seen.insert(name.to_string()) {
        return Err(CliError::Validation(format!("duplicate source name {name:?}")));
    }
    Ok(())
}

impl QiPlan {
    pub fn new(config: &RunConfig) -> Result<Self, CliError> {
        let c = &config.qi_run;
        let params = config.source.params()?;
        let eps2 = c.eps2_lambda0.unwrap_or(params.eps2_lambda0);
        if c.sources.is_empty() {
            return Err(CliError::Validation("qi_run.sources is empty".into()));
        }
        let mut seen = HashSet::new();
        let sources = c
            .sources
            .iter()
            .map(|QiSourceConfig { name, spectrum }| {
                check_name(name, &mut seen)?;
                let spectrum = build_spectrum(spectrum, &params)
                    .map_err(|e| CliError::Validation(format!("source {name}: {e}")))?;
                Ok((name.clone(), QiSource::new(spectrum, eps2)?))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let present = c.channel.channel()?;
        let absent = QiChannel::new(0.0, present.mu_b)?;
        let analytic = c
            .analytic_channels
            .iter()
            .map(|ch| ch.channel())
            .collect::<Result<Vec<_>, _>>()?;
        DiscriminationConfig {
            block_len: c.block_len,
            blocks: c.blocks,
            seed: 0,
        }
        .validate()?;
        if c.oracle_modes == 0 || c.oracle_modes > tfe_core::qi::ORACLE_MAX_MODES {
            return Err(CliError::Validation(format!(
                "qi_run.oracle_modes must lie in 1..={}",
                tfe_core::qi::ORACLE_MAX_MODES
            )));
        }
        Ok(Self {
            sources,
            present,
            absent,
            analytic,
            block_len: c.block_len,
            blocks: c.blocks,
            oracle_modes: c.oracle_modes,
            reference: match c.noise_reference {
                NoiseReferenceConfig::Collected => NoiseReference::Collected,
                NoiseReferenceConfig::BeamSplitterPort => NoiseReference::BeamSplitterPort,
            },
        })
    }

    /// Closed form matching the configured noise reference.
    fn model(&self, source: &QiSource, channel: &QiChannel) -> f64 {
        match self.reference {
            NoiseReference::Collected => pd_qi(source, channel),
            NoiseReference::BeamSplitterPort => {
                let t = pd_qi_terms(source, channel);
                t.signal + (1.0 - channel.eta) * t.noise
            }
        }
    }

    pub fn run(self, seed: u64, out: &mut OutputDir) -> Result<serde_json::Value, CliError> {
        let channels: Vec<QiChannel> = std::iter::once(self.present).chain(self.analytic.iter().copied()).collect();
        let mut analytic_rows = Vec::new();
        let mut worst = 0.0f64;
        let mut mismatches = Vec::new();
        for (name, source) in &self.sources {
            let n_modes = source.spectrum.len();
            for ch in &channels {
                let terms = pd_qi_terms(source, ch);
                let (oracle, diff) = if n_modes <= self.oracle_modes {
                    let o = qi_expectation_oracle_with(source, ch, n_modes, self.reference)?;
                    let d = o - self.model(source, ch);
                    worst = worst.max(d.abs());
                    if d.abs() > ORACLE_TOLERANCE {
                        mismatches.push(format!("{name} (η={}, μ_b={}): {d:e}", ch.eta, ch.mu_b));
                    }
                    (num(o), num(d))
                } else {
                    log::warn!("source {name} has {n_modes} modes, above oracle_modes; skipping the oracle");
                    (String::new(), String::new())
                };
                analytic_rows.push(vec![
                    name.clone(),
                    num(source.schmidt_number()),
                    num(ch.eta),
                    num(ch.mu_b),
                    num(pd_qi(source, ch)),
                    num(terms.signal),
                    num(terms.noise),
                    num(pd_ci(ch)),
                    num(pd_ci_matched(source, ch)),
                    oracle,
                    diff,
                ]);
            }
        }
        out.write_csv(
            "qi_analytic.csv",
            CSV_SCHEMA,
            &[
                "source",
                "sn",
                "eta",
                "mu_b",
                "pd_qi",
                "signal_term",
                "noise_term",
                "pd_ci",
                "pd_ci_matched",
                "oracle",
                "oracle_diff",
            ],
            analytic_rows,
        )?;
        if !mismatches.is_empty() {
            return Err(CliError::Oracle(format!(
                "oracle disagrees with the closed form beyond {ORACLE_TOLERANCE:e}: {}",
                mismatches.join("; ")
            )));
        }

        let mut summary_rows = Vec::new();
        let mut roc_rows = Vec::new();
        let mut results = Vec::new();
        for (k, (name, source)) in self.sources.iter().enumerate() {
            let config = DiscriminationConfig {
                block_len: self.block_len,
                blocks: self.blocks,
                seed: seed.wrapping_add(k as u64),
            };
            let mut series = Vec::new();
            let mut per_protocol = serde_json::Map::new();
            for protocol in Protocol::ALL {
                let r = run_discrimination(source, &self.present, &self.absent, protocol, &config)?;
                for (label, h) in [("present", &r.present), ("absent", &r.absent)] {
                    summary_rows.push(vec![
                        name.clone(),
                        protocol.name().to_string(),
                        label.to_string(),
                        h.shots.to_string(),
                        h.detections.to_string(),
                        num(h.p_hat),
                        num(h.ci_low),
                        num(h.ci_high),
                    ]);
                }
                for pt in &r.roc {
                    roc_rows.push(vec![
                        name.clone(),
                        protocol.name().to_string(),
                        pt.threshold.to_string(),
                        num(pt.p_fa),
                        num(pt.p_detect),
                    ]);
                }
                let mut pts = vec![(0.0, 0.0)];
                pts.extend(r.roc.iter().map(|p| (p.p_fa, p.p_detect)));
                pts.push((1.0, 1.0));
                series.push(Series {
                    label: protocol.name().to_string(),
                    points: pts,
                    markers: false,
                });
                per_protocol.insert(
                    protocol.name().to_string(),
                    json!({
                        "p_present": r.present.p_model,
                        "p_absent": r.absent.p_model,
                        "threshold": r.threshold,
                        "p_fa": r.p_fa,
                        "p_miss": r.p_miss,
                        "auc": r.auc(),
                    }),
                );
            }
            out.write_svg(
                &format!("qi_roc_{name}.svg"),
                &line_plot(&format!("ROC, source {name}"), "P_FA", "P_D", &series),
            )?;
            results.push(json!({
                "source": name,
                "schmidt_number": source.schmidt_number(),
                "modes": source.spectrum.len(),
                "protocols": per_protocol,
            }));
        }
        out.write_csv(
            "qi_summary.csv",
            CSV_SCHEMA,
            &["source", "protocol", "hypothesis", "shots", "detections", "p_hat", "ci_low", "ci_high"],
            summary_rows,
        )?;
        out.write_csv(
            "qi_roc.csv",
            CSV_SCHEMA,
            &["source", "protocol", "threshold", "p_fa", "p_detect"],
            roc_rows,
        )?;
        Ok(json!({
            "eta": self.present.eta,
            "mu_b": self.present.mu_b,
            "block_len": self.block_len,
            "blocks": self.blocks,
            "oracle_max_abs_diff": worst,
            "sources": results,
        }))
    }
}
