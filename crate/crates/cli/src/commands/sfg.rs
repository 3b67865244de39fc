use serde_json::json;
use tfe_core::jsa::phase_matching_profile;
use tfe_core::sfg::{pair_density_map, sum_grid};
use tfe_core::{
    encode_shift, gaussian_jsa, n_sfg, sfg_moments, sfg_spectrum_analytic, sfg_spectrum_numeric, EncodingShift,
    JsaGrids, SourceParams,
};

use super::{rel_diff, CSV_SCHEMA};
use crate::config::{PairDensityConfig, RunConfig};
use crate::error::CliError;
use crate::output::{num, OutputDir};
use crate::plot::{heat_map, line_plot, Series};

pub struct SfgPlan {
    params: SourceParams,
    shift: EncodingShift,
    grid_points: usize,
    oversample: usize,
    pair_density: Option<PairDensityConfig>,
}

impl SfgPlan {
    pub fn new(config: &RunConfig) -> Result<Self, CliError> {
        let c = &config.sfg_spectrum;
        let params = config.source.params()?;
        let shift = EncodingShift::new(c.d_omega * config.source.units.factor(), c.d_t)?;
        if c.oversample == 0 {
            return Err(CliError::Validation("sfg_spectrum.oversample must be at least 1".into()));
        }
        if let Some(pd) = &c.pair_density {
            if pd.omega_points == 0 || pd.t_points == 0 || !(pd.omega_widths > 0.0) {
                return Err(CliError::Validation("sfg_spectrum.pair_density window is empty".into()));
            }
            if let Some(h) = pd.t_half_width {
                if !(h > 0.0 && h.is_finite()) {
                    return Err(CliError::Validation(format!("t_half_width must be positive, got {h}")));
                }
            }
        }
        Ok(Self {
            params,
            shift,
            grid_points: c.grid_points,
            oversample: c.oversample,
            pair_density: c.pair_density.clone(),
        })
    }

    pub fn run(self, out: &mut OutputDir) -> Result<serde_json::Value, CliError> {
        let p = &self.params;
        let grids = JsaGrids::for_source(p, self.shift, self.grid_points)?;
        let phi = encode_shift(&gaussian_jsa(p, &grids.signal, &grids.idler)?, self.shift)?;
        let grid_p = sum_grid(&phi, self.oversample)?;
        let spec = sfg_spectrum_numeric(&phi, &phase_matching_profile(p), p.eps2(), grid_p)?;
        let omegas = spec.grid().to_vec();
        let analytic: Vec<f64> = omegas.iter().map(|&w| sfg_spectrum_analytic(p, self.shift, w)).collect();

        out.write_csv(
            "sfg_spectrum.csv",
            CSV_SCHEMA,
            &["omega_p", "density", "analytic"],
            omegas
                .iter()
                .zip(spec.density())
                .zip(&analytic)
                .map(|((&w, &d), &a)| vec![num(w), num(d), num(a)]),
        )?;
        let svg = line_plot(
            "SFG pump spectrum",
            "ω_p (rad/ps)",
            "S(ω_p) (ps)",
            &[
                Series {
                    label: "numeric".into(),
                    points: omegas.iter().copied().zip(spec.density().iter().copied()).collect(),
                    markers: true,
                },
                Series {
                    label: "closed form".into(),
                    points: omegas.iter().copied().zip(analytic.iter().copied()).collect(),
                    markers: false,
                },
            ],
        );
        out.write_svg("sfg_spectrum.svg", &svg)?;

        let m = spec.moments();
        let exact = sfg_moments(p, self.shift);
        let n = n_sfg(p, self.shift);
        let mut results = json!({
            "d_omega": self.shift.d_omega,
            "d_t": self.shift.d_t,
            "grid_points": self.grid_points,
            "pump_points": omegas.len(),
            "total_numeric": m.total,
            "n_sfg": n,
            "total_rel_error": rel_diff(m.total, n),
            "mean_numeric": m.mean,
            "mean_closed_form": exact.mean,
            "variance_numeric": m.variance,
            "variance_closed_form": exact.variance,
        });

        if let Some(pd) = &self.pair_density {
            let center = exact.mean;
            let half = pd.omega_widths * p.sigma_plus;
            let t_half = pd.t_half_width.unwrap_or(6.0 / p.sigma_minus);
            let ws = linspace(center - half, center + half, pd.omega_points);
            let ts = linspace(self.shift.d_t - t_half, self.shift.d_t + t_half, pd.t_points);
            let map = pair_density_map(&phi, &ws, &ts)?;
            out.write_csv(
                "pair_density.csv",
                CSV_SCHEMA,
                &["omega", "t", "density"],
                ws.iter().enumerate().flat_map(|(r, &w)| {
                    let map = &map;
                    ts.iter().enumerate().map(move |(c, &t)| vec![num(w), num(t), num(map[(r, c)])])
                }),
            )?;
            // rows of the plot are ω, columns t
            let z: Vec<Vec<f64>> = (0..ws.len()).map(|r| (0..ts.len()).map(|c| map[(r, c)]).collect()).collect();
            let svg = heat_map("Pair density", "t (ps)", "ω (rad/ps)", &ts, &ws, &z, &[]);
            out.write_svg("pair_density.svg", &svg)?;
            results["pair_density_max"] = json!(map.max());
        }
        Ok(results)
    }
}

pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![(a + b) / 2.0];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}
