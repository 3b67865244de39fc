use serde_json::json;
use tfe_core::{n_sfg, run_sdc_ensemble, EncodingShift, SdcConfig, SdcStats, SourceParams};

use super::CSV_SCHEMA;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{num, OutputDir};
use crate::plot::{heat_map, line_plot, Series};

/// Default sweep margin around the message delays, in units of `1/σ₋`.
const SWEEP_MARGIN: f64 = 6.0;

/// Decoded points per message drawn in the scatter plot.
const SCATTER_POINTS: usize = 2000;

pub struct SweepPlan {
    params: Vec<SourceParams>,
    d_omega: Vec<f64>,
    d_t: Vec<f64>,
    plots: bool,
}

impl SweepPlan {
    pub fn new(config: &RunConfig) -> Result<Self, CliError> {
        let c = &config.sdc_sweep;
        let k = config.source.units.factor();
        if c.sigma_minus.is_empty() {
            return Err(CliError::Validation("sdc_sweep.sigma_minus is empty".into()));
        }
        let base = config.source.params()?;
        let params = c
            .sigma_minus
            .iter()
            .map(|&sm| Ok(SourceParams::new(base.sigma_plus, sm * k, base.omega0, base.eps2_lambda0)?))
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(Self {
            params,
            d_omega: c.d_omega.values()?.into_iter().map(|w| w * k).collect(),
            d_t: c.d_t.values()?,
            plots: c.plots,
        })
    }

    pub fn run(self, out: &mut OutputDir) -> Result<serde_json::Value, CliError> {
        let mut rows = Vec::new();
        let mut summary = Vec::new();
        for (idx, p) in self.params.iter().enumerate() {
            let mut z = vec![vec![0.0; self.d_t.len()]; self.d_omega.len()];
            let mut peak = (f64::MIN, 0.0, 0.0);
            for (r, &dw) in self.d_omega.iter().enumerate() {
                for (c, &dt) in self.d_t.iter().enumerate() {
                    let n = n_sfg(p, EncodingShift::new(dw, dt)?);
                    z[r][c] = n;
                    if n > peak.0 {
                        peak = (n, dw, dt);
                    }
                    rows.push(vec![num(p.sigma_minus), num(dw), num(dt), num(n)]);
                }
            }
            if self.plots {
                let sm = p.sigma_minus;
                let ellipse: Vec<(f64, f64)> = (0..=120)
                    .map(|k| {
                        let th = 2.0 * std::f64::consts::PI * k as f64 / 120.0;
                        (std::f64::consts::SQRT_2 / sm * th.sin(), 2.0 * std::f64::consts::SQRT_2 * sm * th.cos())
                    })
                    .collect();
                let svg = heat_map(
                    &format!("Up-conversion probability, σ₋ = {sm} rad/ps"),
                    "Δt (ps)",
                    "Δω (rad/ps)",
                    &self.d_t,
                    &self.d_omega,
                    &z,
                    &[ellipse],
                );
                out.write_svg(&format!("sdc_sweep_{idx}.svg"), &svg)?;
            }
            summary.push(json!({
                "sigma_minus": p.sigma_minus,
                "peak": peak.0,
                "peak_d_omega": peak.1,
                "peak_d_t": peak.2,
            }));
        }
        out.write_csv("sdc_sweep.csv", CSV_SCHEMA, &["sigma_minus", "d_omega", "d_t", "n_sfg"], rows)?;
        Ok(json!({
            "eps2_lambda0": self.params[0].eps2_lambda0,
            "sweeps": summary,
        }))
    }
}

pub struct RunPlan {
    params: SourceParams,
    messages: Vec<EncodingShift>,
    config: SdcConfig,
    write_trials: bool,
}

impl RunPlan {
    pub fn new(config: &RunConfig) -> Result<Self, CliError> {
        let c = &config.sdc_run;
        let params = config.source.params()?;
        let messages = c.messages(config.source.units)?;
        // conversion peaks where the extra delay cancels the message delay
        let lo = messages.iter().map(|m| -m.d_t).fold(f64::INFINITY, f64::min);
        let hi = messages.iter().map(|m| -m.d_t).fold(f64::NEG_INFINITY, f64::max);
        let margin = SWEEP_MARGIN / params.sigma_minus;
        let sweep_min = c.sweep_min.unwrap_or(lo - margin);
        let sweep_max = c.sweep_max.unwrap_or(hi + margin);
        let mut sdc = SdcConfig::new(&params, sweep_min, sweep_max, c.n_trials, 0)?;
        if let Some(step) = c.sweep_step {
            sdc.sweep_step = step;
        }
        sdc.max_passes = match c.max_passes {
            Some(n) => n,
            None if c.sweep_step.is_some() => sdc.default_max_passes(&params),
            None => sdc.max_passes,
        };
        sdc.survival = c.survival;
        sdc.resolution = c.resolution * config.source.units.factor();
        sdc.validate()?;
        if sdc.n_trials < tfe_core::sdc::MIN_ENSEMBLE_TRIALS {
            return Err(CliError::Validation(format!(
                "sdc_run.n_trials must be at least {}, got {}",
                tfe_core::sdc::MIN_ENSEMBLE_TRIALS,
                sdc.n_trials
            )));
        }
        Ok(Self {
            params,
            messages,
            config: sdc,
            write_trials: c.write_trials,
        })
    }

    pub fn run(mut self, seed: u64, out: &mut OutputDir) -> Result<serde_json::Value, CliError> {
        self.config.seed = seed;
        let ens = run_sdc_ensemble(&self.params, &self.messages, &self.config)?;

        if self.write_trials {
            out.write_csv(
                "sdc_trials.csv",
                CSV_SCHEMA,
                &["message", "trial", "passes", "t_extra", "omega_measured", "d_omega_hat", "d_t_hat", "succeeded"],
                ens.trials.iter().enumerate().flat_map(|(m, ts)| {
                    ts.iter().enumerate().map(move |(j, r)| {
                        vec![
                            m.to_string(),
                            j.to_string(),
                            r.passes.to_string(),
                            num(r.t_extra_at_success),
                            num(r.omega_measured),
                            num(r.decoded_d_omega),
                            num(r.decoded_d_t),
                            r.succeeded.to_string(),
                        ]
                    })
                }),
            )?;
        }

        let row = |label: String, s: &SdcStats, m: Option<&EncodingShift>| {
            vec![
                label,
                num(s.var_d_t),
                num(s.var_d_omega),
                num(s.var_product),
                num(s.mean_passes),
                m.map_or(String::new(), |m| num(m.d_omega)),
                m.map_or(String::new(), |m| num(m.d_t)),
                num(s.success_rate),
            ]
        };
        let mut rows: Vec<Vec<String>> = ens
            .per_message
            .iter()
            .zip(&ens.messages)
            .enumerate()
            .map(|(k, (s, m))| row(k.to_string(), s, Some(m)))
            .collect();
        rows.push(row("all".into(), &ens.pooled, None));
        out.write_csv(
            "sdc_summary.csv",
            CSV_SCHEMA,
            &["message", "var_dt", "var_domega", "var_product", "mean_passes", "d_omega", "d_t", "success_rate"],
            rows,
        )?;

        let series: Vec<Series> = ens
            .trials
            .iter()
            .enumerate()
            .map(|(m, ts)| Series {
                label: format!("message {m}"),
                points: ts
                    .iter()
                    .filter(|r| r.succeeded)
                    .take(SCATTER_POINTS)
                    .map(|r| (r.decoded_d_t, r.decoded_d_omega))
                    .collect(),
                markers: true,
            })
            .collect();
        out.write_svg(
            "sdc_decoded.svg",
            &line_plot("Decoded messages", "Δt̂ (ps)", "Δω̂ (rad/ps)", &series),
        )?;

        let stats = |s: &SdcStats| {
            json!({
                "n_trials": s.n_trials,
                "n_success": s.n_success,
                "success_rate": s.success_rate,
                "var_d_t": s.var_d_t,
                "var_d_omega": s.var_d_omega,
                "var_product": s.var_product,
                "mean_d_t": s.mean_d_t,
                "mean_d_omega": s.mean_d_omega,
                "mean_passes": s.mean_passes,
            })
        };
        Ok(json!({
            "sweep_min": self.config.sweep_min,
            "sweep_max": self.config.sweep_max,
            "sweep_step": self.config.sweep_step,
            "max_passes": self.config.max_passes,
            "per_message": ens.per_message.iter().map(stats).collect::<Vec<_>>(),
            "pooled": stats(&ens.pooled),
        }))
    }
}
