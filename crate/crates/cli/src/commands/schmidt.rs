use std::f64::consts::SQRT_2;

use serde_json::json;
use tfe_core::schmidt::schmidt_coefficients;
use tfe_core::{gaussian_jsa, EncodingShift, JsaGrids, SourceParams, Truncation};

use super::{rel_diff, CSV_SCHEMA};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{num, OutputDir};
use crate::plot::{line_plot, Series};

pub struct SchmidtPlan {
    params: SourceParams,
    grid_points: usize,
    truncation: Truncation,
    write_amplitude: bool,
}

/// Schmidt number of the Gaussian state, `(r + 1/r)/2` with `r = √2σ₋/σ₊`.
pub fn closed_form_schmidt_number(params: &SourceParams) -> f64 {
    let r = SQRT_2 * params.sigma_minus / params.sigma_plus;
    0.5 * (r + 1.0 / r)
}

impl SchmidtPlan {
    pub fn new(config: &RunConfig) -> Result<Self, CliError> {
        let c = &config.schmidt;
        let tol = c.energy_tolerance;
        if !(0.0..1.0).contains(&tol) {
            return Err(CliError::Validation(format!("schmidt.energy_tolerance must lie in [0, 1), got {tol}")));
        }
        let truncation = match c.max_modes {
            Some(0) => return Err(CliError::Validation("schmidt.max_modes must be at least 1".into())),
            Some(k) => Truncation::Rank(k),
            None => Truncation::Energy(tol),
        };
        Ok(Self {
            params: config.source.params()?,
            grid_points: c.grid_points,
            truncation,
            write_amplitude: c.write_amplitude,
        })
    }

    pub fn run(self, out: &mut OutputDir) -> Result<serde_json::Value, CliError> {
        let g = JsaGrids::for_source(&self.params, EncodingShift::ZERO, self.grid_points)?;
        let phi = gaussian_jsa(&self.params, &g.signal, &g.idler)?;
        let s = schmidt_coefficients(&phi, self.truncation)?;
        out.write_csv(
            "schmidt.csv",
            CSV_SCHEMA,
            &["n", "lambda"],
            s.lambdas().iter().enumerate().map(|(n, &l)| vec![n.to_string(), num(l)]),
        )?;
        if self.write_amplitude {
            let ws = phi.grid_s().to_vec();
            let wi = phi.grid_i().to_vec();
            let v = phi.values();
            out.write_csv(
                "jsa.csv",
                CSV_SCHEMA,
                &["omega_s", "omega_i", "re", "im"],
                ws.iter().enumerate().flat_map(|(a, &x)| {
                    wi.iter().enumerate().map(move |(b, &y)| {
                        let z = v[(a, b)];
                        vec![num(x), num(y), num(z.re), num(z.im)]
                    })
                }),
            )?;
        }
        out.write_svg(
            "schmidt.svg",
            &line_plot(
                "Schmidt coefficients",
                "n",
                "λ_n",
                &[Series {
                    label: "λ_n".into(),
                    points: s.lambdas().iter().enumerate().map(|(n, &l)| (n as f64, l)).collect(),
                    markers: true,
                }],
            ),
        )?;
        let sn = s.schmidt_number();
        let exact = closed_form_schmidt_number(&self.params);
        Ok(json!({
            "grid_points": self.grid_points,
            "modes": s.len(),
            "total": s.total(),
            "discarded": s.discarded(),
            "schmidt_number": sn,
            "schmidt_number_closed_form": exact,
            "rel_error": rel_diff(sn, exact),
        }))
    }
}
