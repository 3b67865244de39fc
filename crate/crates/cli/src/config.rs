//! JSON run configuration.
//!
//! One document with optional per-experiment sections; every field has a
//! default, so `{}` is a valid config. Frequencies are rad/ps unless
//! `source.units` says otherwise, times are ps.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tfe_core::{EncodingShift, QiChannel, SourceParams};

use crate::error::CliError;

/// Config schema version written to manifests.
pub const CONFIG_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub source: SourceConfig,
    pub sfg_spectrum: SfgSpectrumConfig,
    pub sdc_sweep: SdcSweepConfig,
    pub sdc_run: SdcRunConfig,
    pub qi_run: QiRunConfig,
    pub schmidt: SchmidtConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Unit of every frequency-valued config entry.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrequencyUnit {
    #[default]
    #[serde(rename = "rad/ps")]
    RadPerPs,
    /// Angular THz, numerically identical to rad/ps.
    #[serde(rename = "THz-angular")]
    ThzAngular,
    /// Cycles per ps; multiplied by 2π on input.
    #[serde(rename = "THz")]
    Thz,
}

impl FrequencyUnit {
    pub fn factor(self) -> f64 {
        match self {
            FrequencyUnit::RadPerPs | FrequencyUnit::ThzAngular => 1.0,
            FrequencyUnit::Thz => 2.0 * PI,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FrequencyUnit::RadPerPs => "rad/ps",
            FrequencyUnit::ThzAngular => "THz-angular",
            FrequencyUnit::Thz => "THz",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub omega0: f64,
    pub eps2_lambda0: f64,
    pub units: FrequencyUnit,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            sigma_plus: 0.05,
            sigma_minus: 1.0,
            omega0: 0.0,
            eps2_lambda0: 1e-3,
            units: FrequencyUnit::RadPerPs,
        }
    }
}

impl SourceConfig {
    pub fn params(&self) -> Result<SourceParams, CliError> {
        let k = self.units.factor();
        Ok(SourceParams::new(
            self.sigma_plus * k,
            self.sigma_minus * k,
            self.omega0 * k,
            self.eps2_lambda0,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SfgSpectrumConfig {
    pub d_omega: f64,
    pub d_t: f64,
    /// Samples per JSA axis.
    pub grid_points: usize,
    /// Pump-grid refinement of the sum lattice.
    pub oversample: usize,
    pub pair_density: Option<PairDensityConfig>,
}

impl Default for SfgSpectrumConfig {
    fn default() -> Self {
        Self {
            d_omega: 0.0,
            d_t: 0.0,
            grid_points: 512,
            oversample: 1,
            pair_density: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairDensityConfig {
    pub omega_points: usize,
    /// Half-width of the frequency-sum window in units of σ₊.
    pub omega_widths: f64,
    pub t_points: usize,
    /// Half-width of the time window, ps; defaults to `6/σ₋`.
    pub t_half_width: Option<f64>,
}

impl Default for PairDensityConfig {
    fn default() -> Self {
        Self {
            omega_points: 41,
            omega_widths: 4.0,
            t_points: 121,
            t_half_width: None,
        }
    }
}

/// Closed range sampled at `points` evenly spaced values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Range {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if !(self.min <= self.max) || self.points == 0 || (self.points == 1 && self.min != self.max) {
            return Err(CliError::Validation(format!(
                "range [{}, {}] with {} points is empty or reversed",
                self.min, self.max, self.points
            )));
        }
        if self.points == 1 {
            return Ok(vec![self.min]);
        }
        let step = (self.max - self.min) / (self.points - 1) as f64;
        Ok((0..self.points).map(|k| self.min + k as f64 * step).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdcSweepConfig {
    pub sigma_minus: Vec<f64>,
    pub d_omega: Range,
    pub d_t: Range,
    pub plots: bool,
}

impl Default for SdcSweepConfig {
    fn default() -> Self {
        Self {
            sigma_minus: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            d_omega: Range {
                min: -4.0,
                max: 4.0,
                points: 81,
            },
            d_t: Range {
                min: -10.0,
                max: 10.0,
                points: 101,
            },
            plots: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MessageConfig {
    pub d_omega: f64,
    pub d_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdcRunConfig {
    pub messages: Vec<MessageConfig>,
    pub n_trials: usize,
    /// Sweep range, ps; defaults to `±6/σ₋` around the message delays.
    pub sweep_min: Option<f64>,
    pub sweep_max: Option<f64>,
    pub sweep_step: Option<f64>,
    pub max_passes: Option<u64>,
    pub survival: f64,
    pub resolution: f64,
    pub write_trials: bool,
}

impl Default for SdcRunConfig {
    fn default() -> Self {
        Self {
            messages: vec![
                MessageConfig { d_omega: 0.0, d_t: 0.0 },
                MessageConfig { d_omega: 0.1, d_t: 1.0 },
                MessageConfig { d_omega: -0.1, d_t: -1.0 },
            ],
            n_trials: 10_000,
            sweep_min: None,
            sweep_max: None,
            sweep_step: None,
            max_passes: None,
            survival: 1.0,
            resolution: 0.0,
            write_trials: true,
        }
    }
}

impl SdcRunConfig {
    pub fn messages(&self, units: FrequencyUnit) -> Result<Vec<EncodingShift>, CliError> {
        if self.messages.is_empty() {
            return Err(CliError::Validation("sdc_run.messages is empty".into()));
        }
        self.messages
            .iter()
            .map(|m| Ok(EncodingShift::new(m.d_omega * units.factor(), m.d_t)?))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub eta: f64,
    pub mu_b: f64,
}

impl ChannelConfig {
    pub fn channel(&self) -> Result<QiChannel, CliError> {
        Ok(QiChannel::new(self.eta, self.mu_b)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectrumSpec {
    /// Explicit squared Schmidt coefficients.
    Lambdas(Vec<f64>),
    /// `k` equal modes.
    Uniform(usize),
    /// `λ_n = (1 − q) qⁿ` for `modes` terms.
    Geometric { q: f64, modes: usize },
    /// Schmidt spectrum of the configured Gaussian source.
    Gaussian { grid_points: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QiSourceConfig {
    pub name: String,
    pub spectrum: SpectrumSpec,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseReferenceConfig {
    #[default]
    Collected,
    BeamSplitterPort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QiRunConfig {
    /// Target-present channel; the absent channel has η = 0 and the same μ_b.
    pub channel: ChannelConfig,
    /// Extra channels evaluated in the analytic table only.
    pub analytic_channels: Vec<ChannelConfig>,
    pub sources: Vec<QiSourceConfig>,
    /// Per-shot conversion probability; defaults to `source.eps2_lambda0`.
    pub eps2_lambda0: Option<f64>,
    pub block_len: u64,
    pub blocks: u64,
    pub oracle_modes: usize,
    pub noise_reference: NoiseReferenceConfig,
}

impl Default for QiRunConfig {
    fn default() -> Self {
        let uniform = |k: usize| QiSourceConfig {
            name: format!("sn{k}"),
            spectrum: SpectrumSpec::Uniform(k),
        };
        Self {
            channel: ChannelConfig { eta: 0.1, mu_b: 1.0 },
            analytic_channels: vec![ChannelConfig { eta: 0.1, mu_b: 0.0 }],
            sources: vec![uniform(1), uniform(10), uniform(100)],
            eps2_lambda0: None,
            block_len: 100_000,
            blocks: 200,
            oracle_modes: 1024,
            noise_reference: NoiseReferenceConfig::Collected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchmidtConfig {
    pub grid_points: usize,
    /// Drop trailing modes holding at most this much weight.
    pub energy_tolerance: f64,
    pub max_modes: Option<usize>,
    pub write_amplitude: bool,
}

impl Default for SchmidtConfig {
    fn default() -> Self {
        Self {
            grid_points: 256,
            energy_tolerance: 1e-10,
            max_modes: None,
            write_amplitude: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(RunConfig::from_json(r#"{"source": {"sigma": 1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn spectra_parse() {
        let c = RunConfig::from_json(
            r#"{"qi_run": {"sources": [
                {"name": "a", "spectrum": {"lambdas": [0.5, 0.5]}},
                {"name": "b", "spectrum": {"uniform": 4}},
                {"name": "c", "spectrum": {"geometric": {"q": 0.5, "modes": 40}}},
                {"name": "d", "spectrum": {"gaussian": {"grid_points": 128}}}
            ]}}"#,
        )
        .unwrap();
        assert_eq!(c.qi_run.sources.len(), 4);
        assert_eq!(c.qi_run.sources[1].spectrum, SpectrumSpec::Uniform(4));
    }

    #[test]
    fn thz_input_is_converted() {
        let c = RunConfig::from_json(r#"{"source": {"sigma_plus": 0.01, "sigma_minus": 0.1, "units": "THz"}}"#).unwrap();
        let p = c.source.params().unwrap();
        assert!((p.sigma_minus - 0.2 * PI).abs() < 1e-15);
        let same = RunConfig::from_json(r#"{"source": {"units": "THz-angular"}}"#).unwrap();
        assert_eq!(same.source.params().unwrap().sigma_minus, 1.0);
    }

    #[test]
    fn ranges() {
        let r = Range { min: -1.0, max: 1.0, points: 5 };
        assert_eq!(r.values().unwrap(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(Range { min: 1.0, max: 0.0, points: 3 }.values().is_err());
        assert!(Range { min: 0.0, max: 1.0, points: 0 }.values().is_err());
    }
}
