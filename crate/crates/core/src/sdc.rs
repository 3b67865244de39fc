//! Monte Carlo model of the superdense-coding receiver.
//!
//! Alice's coded pair circulates through the SFG crystal while an extra
//! signal delay `Δt_extra` sweeps back and forth. Each pass converts the pair
//! with probability
//! `p = ε²λ₀·exp(−Δω²/(8σ₋²) − σ₋²(Δt + Δt_extra)²/2)`;
//! on conversion the pump photon's frequency is read on a spectrometer and
//! the message is decoded as `(ω − ω₀, −Δt_extra)`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{substream, Domain};
use crate::source::{EncodingShift, SourceParams};
use crate::stats;

/// Smallest ensemble for which variances are reported.
pub const MIN_ENSEMBLE_TRIALS: usize = 100;

/// Safety factor on the expected pass count when `max_passes` is defaulted.
const PASS_SAFETY: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SdcConfig {
    /// Sweep range of the extra delay, ps.
    pub sweep_min: f64,
    pub sweep_max: f64,
    /// Delay increment per pass, ps.
    pub sweep_step: f64,
    pub max_passes: u64,
    pub seed: u64,
    pub n_trials: usize,
    /// Probability that an unconverted pair survives one loop.
    pub survival: f64,
    /// Spectrometer resolution (standard deviation), rad/ps. Zero is ideal.
    pub resolution: f64,
}

impl SdcConfig {
    /// Sweep over `[sweep_min, sweep_max]` with step `0.1/σ₋` and
    /// `max_passes = ceil(10/(ε²λ₀·duty))`.
    pub fn new(params: &SourceParams, sweep_min: f64, sweep_max: f64, n_trials: usize, seed: u64) -> Result<Self> {
        params.validate()?;
        let mut cfg = Self {
            sweep_min,
            sweep_max,
            sweep_step: 0.1 / params.sigma_minus,
            max_passes: 1,
            seed,
            n_trials,
            survival: 1.0,
            resolution: 0.0,
        };
        cfg.max_passes = cfg.default_max_passes(params);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Symmetric sweep `[−half_width, half_width]`.
    pub fn symmetric(params: &SourceParams, half_width: f64, n_trials: usize, seed: u64) -> Result<Self> {
        Self::new(params, -half_width, half_width, n_trials, seed)
    }

    /// Fraction of the sweep over which a pair has a fair chance of
    /// converting, about `√(2π)/σ₋` of delay.
    pub fn duty(&self, params: &SourceParams) -> f64 {
        let window = (2.0 * std::f64::consts::PI).sqrt() / params.sigma_minus;
        let length = self.sweep_max - self.sweep_min;
        if length <= window {
            1.0
        } else {
            window / length
        }
    }

    pub fn default_max_passes(&self, params: &SourceParams) -> u64 {
        (PASS_SAFETY / (params.eps2_lambda0 * self.duty(params))).ceil() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sweep_min.is_finite() || !self.sweep_max.is_finite() || self.sweep_min > self.sweep_max {
            return Err(Error::invalid(format!(
                "sweep range [{}, {}] is not a finite interval",
                self.sweep_min, self.sweep_max
            )));
        }
        if !(self.sweep_step > 0.0 && self.sweep_step.is_finite()) {
            return Err(Error::invalid(format!("sweep_step must be positive, got {}", self.sweep_step)));
        }
        if self.max_passes == 0 {
            return Err(Error::invalid("max_passes must be at least 1"));
        }
        if self.n_trials == 0 {
            return Err(Error::invalid("n_trials must be at least 1"));
        }
        if !(self.survival > 0.0 && self.survival <= 1.0) {
            return Err(Error::invalid(format!("survival must lie in (0, 1], got {}", self.survival)));
        }
        if !(self.resolution >= 0.0 && self.resolution.is_finite()) {
            return Err(Error::invalid(format!("resolution must be non-negative, got {}", self.resolution)));
        }
        Ok(())
    }

    /// Number of distinct sweep positions.
    pub fn sweep_points(&self) -> usize {
        ((self.sweep_max - self.sweep_min) / self.sweep_step + 1e-9).floor() as usize + 1
    }

    /// Passes in one full up-and-down sweep.
    pub fn sweep_period(&self) -> usize {
        let n = self.sweep_points();
        if n == 1 {
            1
        } else {
            2 * (n - 1)
        }
    }

    /// `Δt_extra` on zero-based pass `k`: a triangular sweep starting at
    /// `sweep_min`.
    pub fn t_extra(&self, k: u64) -> f64 {
        let n = self.sweep_points();
        let period = self.sweep_period() as u64;
        let idx = (k % period) as usize;
        let pos = if idx < n { idx } else { 2 * (n - 1) - idx };
        self.sweep_min + pos as f64 * self.sweep_step
    }
}

/// Per-pass conversion probability at total extra delay `t_extra`.
pub fn pass_probability(params: &SourceParams, message: EncodingShift, t_extra: f64) -> f64 {
    let sm = params.sigma_minus;
    let total = message.d_t + t_extra;
    params.eps2_lambda0 * (-message.d_omega.powi(2) / (8.0 * sm * sm) - sm * sm * total * total / 2.0).exp()
}

/// Conversion probabilities over one sweep period.
pub fn sweep_probabilities(params: &SourceParams, message: EncodingShift, config: &SdcConfig) -> Vec<f64> {
    (0..config.sweep_period() as u64)
        .map(|k| pass_probability(params, message, config.t_extra(k)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdcTrialResult {
    /// Passes used, including the converting one.
    pub passes: u64,
    pub t_extra_at_success: f64,
    pub omega_measured: f64,
    pub decoded_d_omega: f64,
    pub decoded_d_t: f64,
    pub succeeded: bool,
}

impl SdcTrialResult {
    fn failed(passes: u64) -> Self {
        Self {
            passes,
            t_extra_at_success: f64::NAN,
            omega_measured: f64::NAN,
            decoded_d_omega: f64::NAN,
            decoded_d_t: f64::NAN,
            succeeded: false,
        }
    }
}

/// `(ω − ω₀, −Δt_extra)`.
pub fn decode(t_extra: f64, omega_measured: f64, omega0: f64) -> EncodingShift {
    EncodingShift {
        d_omega: omega_measured - omega0,
        d_t: -t_extra,
    }
}

fn trial_with_table<R: Rng + ?Sized>(
    params: &SourceParams,
    message: EncodingShift,
    config: &SdcConfig,
    table: &[f64],
    rng: &mut R,
) -> Result<SdcTrialResult> {
    let period = table.len() as u64;
    for k in 0..config.max_passes {
        let p = table[(k % period) as usize];
        if rng.random::<f64>() < p {
            let sd = (params.sigma_plus.powi(2) + config.resolution.powi(2)).sqrt();
            let normal = Normal::new(params.omega0 + message.d_omega, sd)
                .map_err(|e| Error::Computation(format!("spectrometer model: {e}")))?;
            let omega = normal.sample(rng);
            let t_extra = config.t_extra(k);
            let decoded = decode(t_extra, omega, params.omega0);
            return Ok(SdcTrialResult {
                passes: k + 1,
                t_extra_at_success: t_extra,
                omega_measured: omega,
                decoded_d_omega: decoded.d_omega,
                decoded_d_t: decoded.d_t,
                succeeded: true,
            });
        }
        if config.survival < 1.0 && rng.random::<f64>() >= config.survival {
            return Ok(SdcTrialResult::failed(k + 1));
        }
    }
    Ok(SdcTrialResult::failed(config.max_passes))
}

/// One pass-by-pass trial drawing from `rng`. Exhaustion or loss of the pair
/// yields `succeeded = false`.
pub fn run_sdc_trial<R: Rng + ?Sized>(
    params: &SourceParams,
    message: EncodingShift,
    config: &SdcConfig,
    rng: &mut R,
) -> Result<SdcTrialResult> {
    params.validate()?;
    config.validate()?;
    let table = sweep_probabilities(params, message, config);
    trial_with_table(params, message, config, &table, rng)
}

/// Estimator statistics about the true message values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdcStats {
    pub n_trials: usize,
    pub n_success: usize,
    /// Mean square error of `Δt̂`, ps².
    pub var_d_t: f64,
    /// Mean square error of `Δω̂`, (rad/ps)².
    pub var_d_omega: f64,
    pub var_product: f64,
    pub mean_d_t: f64,
    pub mean_d_omega: f64,
    /// Mean passes over all trials.
    pub mean_passes: f64,
    pub success_rate: f64,
}

impl SdcStats {
    fn from_trials(trials: &[(EncodingShift, &SdcTrialResult)]) -> Self {
        let ok: Vec<&(EncodingShift, &SdcTrialResult)> = trials.iter().filter(|(_, r)| r.succeeded).collect();
        let dt_err: Vec<f64> = ok.iter().map(|(m, r)| r.decoded_d_t - m.d_t).collect();
        let dw_err: Vec<f64> = ok.iter().map(|(m, r)| r.decoded_d_omega - m.d_omega).collect();
        let var_d_t = stats::mean_square_about(&dt_err, 0.0);
        let var_d_omega = stats::mean_square_about(&dw_err, 0.0);
        let passes: Vec<f64> = trials.iter().map(|(_, r)| r.passes as f64).collect();
        Self {
            n_trials: trials.len(),
            n_success: ok.len(),
            var_d_t,
            var_d_omega,
            var_product: var_d_t * var_d_omega,
            mean_d_t: stats::mean(&ok.iter().map(|(_, r)| r.decoded_d_t).collect::<Vec<_>>()),
            mean_d_omega: stats::mean(&ok.iter().map(|(_, r)| r.decoded_d_omega).collect::<Vec<_>>()),
            mean_passes: stats::mean(&passes),
            success_rate: ok.len() as f64 / trials.len().max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdcEnsemble {
    pub messages: Vec<EncodingShift>,
    /// Trials per message, in trial order.
    pub trials: Vec<Vec<SdcTrialResult>>,
    pub per_message: Vec<SdcStats>,
    pub pooled: SdcStats,
}

/// Runs `config.n_trials` trials for every message. Trial `j` of message `m`
/// draws from the substream `(seed, m, j)`, so results do not depend on
/// scheduling.
pub fn run_sdc_ensemble(params: &SourceParams, messages: &[EncodingShift], config: &SdcConfig) -> Result<SdcEnsemble> {
    params.validate()?;
    config.validate()?;
    if config.n_trials < MIN_ENSEMBLE_TRIALS {
        return Err(Error::invalid(format!(
            "ensembles need at least {MIN_ENSEMBLE_TRIALS} trials, got {}",
            config.n_trials
        )));
    }
    if messages.is_empty() {
        return Err(Error::invalid("no messages to send"));
    }
    let mut trials = Vec::with_capacity(messages.len());
    for (m, &message) in messages.iter().enumerate() {
        if -message.d_t < config.sweep_min || -message.d_t > config.sweep_max {
            log::warn!(
                "message delay {} is outside the sweep [{}, {}]; expect few conversions",
                message.d_t,
                config.sweep_min,
                config.sweep_max
            );
        }
        let table = sweep_probabilities(params, message, config);
        let domain = Domain::SdcMessage(m as u32);
        let results: Vec<SdcTrialResult> = (0..config.n_trials as u64)
            .into_par_iter()
            .map(|j| {
                let mut rng = substream(config.seed, domain, j);
                trial_with_table(params, message, config, &table, &mut rng)
            })
            .collect::<Result<_>>()?;
        trials.push(results);
    }
    let per_message = messages
        .iter()
        .zip(&trials)
        .map(|(m, ts)| SdcStats::from_trials(&ts.iter().map(|r| (*m, r)).collect::<Vec<_>>()))
        .collect();
    let all: Vec<(EncodingShift, &SdcTrialResult)> = messages
        .iter()
        .zip(&trials)
        .flat_map(|(m, ts)| ts.iter().map(move |r| (*m, r)))
        .collect();
    let pooled = SdcStats::from_trials(&all);
    Ok(SdcEnsemble {
        messages: messages.to_vec(),
        trials,
        per_message,
        pooled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Expected passes of a trial with per-pass probabilities repeating with
    /// the sweep, capped at `cap` passes.
    fn expected_passes(table: &[f64], cap: u64) -> f64 {
        let mut survive = 1.0;
        let mut expect = 0.0;
        for k in 0..cap {
            expect += survive;
            survive *= 1.0 - table[(k % table.len() as u64) as usize];
        }
        expect
    }

    #[test]
    fn decode_sign_conventions() {
        assert_eq!(decode(0.0, 3.0, 3.0), EncodingShift::ZERO);
        let d = decode(-3.2, 2.0 + 1.1, 2.0);
        assert!((d.d_omega - 1.1).abs() < 1e-12);
        assert_eq!(d.d_t, 3.2);
    }

    #[test]
    fn triangular_schedule() {
        let p = SourceParams::new(0.1, 1.0, 0.0, 0.5).unwrap();
        let mut c = SdcConfig::new(&p, -1.0, 1.0, 100, 0).unwrap();
        c.sweep_step = 0.5;
        assert_eq!(c.sweep_points(), 5);
        assert_eq!(c.sweep_period(), 8);
        let t: Vec<f64> = (0..10).map(|k| c.t_extra(k)).collect();
        assert_eq!(t, vec![-1.0, -0.5, 0.0, 0.5, 1.0, 0.5, 0.0, -0.5, -1.0, -0.5]);
    }

    #[test]
    fn default_max_passes_covers_expectation() {
        let p = SourceParams::new(0.05, 1.0, 0.0, 1e-3).unwrap();
        let c = SdcConfig::symmetric(&p, 6.0, 100, 0).unwrap();
        let table = sweep_probabilities(&p, EncodingShift::ZERO, &c);
        let expect = expected_passes(&table, u64::MAX >> 40);
        assert!(c.max_passes as f64 > 5.0 * expect, "{} vs {expect}", c.max_passes);
    }

    #[test]
    fn pass_probability_peaks_at_cancelled_delay() {
        let p = SourceParams::new(0.1, 0.8, 0.0, 0.2).unwrap();
        let m = EncodingShift::new(0.0, 1.5).unwrap();
        assert_eq!(pass_probability(&p, m, -1.5), 0.2);
        assert!(pass_probability(&p, m, -1.0) < 0.2);
    }

    #[test]
    fn idealized_trial_succeeds_near_zero_delay() {
        let p = SourceParams::new(0.05, 1.0, 0.0, 1.0).unwrap();
        let c = SdcConfig::symmetric(&p, 4.0, 100, 9).unwrap();
        let mut rng = substream(9, Domain::SdcMessage(0), 0);
        let r = run_sdc_trial(&p, EncodingShift::ZERO, &c, &mut rng).unwrap();
        assert!(r.succeeded);
        assert!(r.decoded_d_t.abs() < 4.0);
        assert!(r.passes >= 1 && r.passes <= c.max_passes);
    }

    #[test]
    fn sharp_limit_recovers_message() {
        let p = SourceParams::new(1e-9, 1e3, 2.0, 1.0).unwrap();
        let mut c = SdcConfig::symmetric(&p, 1.0, 100, 3).unwrap();
        c.max_passes = 100_000;
        let msg = EncodingShift::new(0.37, -0.42).unwrap();
        for j in 0..20 {
            let mut rng = substream(3, Domain::SdcMessage(0), j);
            let r = run_sdc_trial(&p, msg, &c, &mut rng).unwrap();
            assert!(r.succeeded);
            assert!((r.decoded_d_omega - 0.37).abs() < 1e-7);
            assert!((r.decoded_d_t + 0.42).abs() < 5e-3);
        }
    }

    #[test]
    fn delay_outside_sweep_never_converts() {
        let p = SourceParams::new(0.05, 1.0, 0.0, 0.1).unwrap();
        let mut c = SdcConfig::symmetric(&p, 3.0, 200, 1).unwrap();
        c.max_passes = 2000;
        let e = run_sdc_ensemble(&p, &[EncodingShift::new(0.0, 20.0).unwrap()], &c).unwrap();
        assert_eq!(e.pooled.success_rate, 0.0);
        assert!(e.pooled.var_d_t.is_nan());
    }

    #[test]
    fn ensemble_is_reproducible() {
        let p = SourceParams::new(0.05, 1.0, 0.0, 0.05).unwrap();
        let c = SdcConfig::symmetric(&p, 5.0, 300, 42).unwrap();
        let msgs = [EncodingShift::ZERO, EncodingShift::new(0.2, 1.0).unwrap()];
        let a = run_sdc_ensemble(&p, &msgs, &c).unwrap();
        let b = run_sdc_ensemble(&p, &msgs, &c).unwrap();
        assert_eq!(a, b);
        let mut other = c.clone();
        other.seed = 43;
        assert_ne!(a.trials, run_sdc_ensemble(&p, &msgs, &other).unwrap().trials);
    }

    #[test]
    fn ensemble_statistics() {
        let p = SourceParams::new(0.05, 1.0, 0.0, 0.02).unwrap();
        let c = SdcConfig::symmetric(&p, 6.0, 3000, 5).unwrap();
        let msg = EncodingShift::new(-0.3, 1.2).unwrap();
        let e = run_sdc_ensemble(&p, &[msg], &c).unwrap();
        let s = e.pooled;
        assert_eq!(s.success_rate, 1.0);
        let n = s.n_success as f64;
        assert!((s.mean_d_omega - msg.d_omega).abs() < 4.0 * 0.05 / n.sqrt(), "{s:?}");
        assert!((s.mean_d_t - msg.d_t).abs() < c.sweep_step / 2.0 + 3.0 / n.sqrt());
        assert!((s.var_d_omega / 0.0025 - 1.0).abs() < 0.1);
        assert!((s.var_d_t - 1.0).abs() < 0.2);
        // geometric-trial oracle for the pass count
        let table = sweep_probabilities(&p, msg, &c);
        let expect = expected_passes(&table, c.max_passes);
        let sd: f64 = {
            let passes: Vec<f64> = e.trials[0].iter().map(|r| r.passes as f64).collect();
            stats::sample_variance(&passes).sqrt()
        };
        assert!((s.mean_passes - expect).abs() < 4.0 * sd / n.sqrt(), "{} vs {expect}", s.mean_passes);
    }

    #[test]
    fn lossy_loop_fails_some_trials() {
        let p = SourceParams::new(0.05, 1.0, 0.0, 0.01).unwrap();
        let mut c = SdcConfig::symmetric(&p, 6.0, 500, 8).unwrap();
        c.survival = 0.999;
        let e = run_sdc_ensemble(&p, &[EncodingShift::ZERO], &c).unwrap();
        assert!(e.pooled.success_rate > 0.0 && e.pooled.success_rate < 1.0);
    }

    #[test]
    fn invalid_configs() {
        let p = SourceParams::new(0.05, 1.0, 0.0, 0.01).unwrap();
        assert!(SdcConfig::new(&p, 1.0, -1.0, 100, 0).is_err());
        assert!(SdcConfig::new(&p, -1.0, 1.0, 0, 0).is_err());
        let c = SdcConfig::symmetric(&p, 1.0, 50, 0).unwrap();
        assert!(run_sdc_ensemble(&p, &[EncodingShift::ZERO], &c).is_err());
    }
}
