//! Sum-frequency generation: the pump-photon spectrum, its moments, and the
//! frequency-sum / time-difference density `P(ω, t)`.
//!
//! Both numeric quantities reduce to integrals along the anti-diagonal
//! `ω_s + ω_i = ω_p` of the two-photon amplitude. When `ω_p` falls between
//! sum-lattice points the amplitude is first resampled along the idler axis
//! by a band-limited fractional shift, after which the line passes exactly
//! through grid samples.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::amplitude::{SpectralProfile, TwoPhotonAmplitude};
use crate::error::{Error, Result};
use crate::fourier;
use crate::grid::FrequencyGrid;
use crate::source::{EncodingShift, SourceParams};
use crate::C64;

/// Pump-photon spectral density `S(ω_p)` on a grid, in probability per rad/ps.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpSpectrum {
    grid_p: FrequencyGrid,
    density: Vec<f64>,
}

impl PumpSpectrum {
    pub fn new(grid_p: FrequencyGrid, density: Vec<f64>) -> Result<Self> {
        if density.len() != grid_p.len() {
            return Err(Error::invalid(format!(
                "{} density samples for a {}-point grid",
                density.len(),
                grid_p.len()
            )));
        }
        Ok(Self { grid_p, density })
    }

    /// Closed-form spectrum sampled on `grid_p`.
    pub fn analytic(params: &SourceParams, shift: EncodingShift, grid_p: FrequencyGrid) -> Self {
        let density = grid_p.points().map(|w| sfg_spectrum_analytic(params, shift, w)).collect();
        Self { grid_p, density }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid_p
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Trapezoid `∫S dω_p`.
    pub fn total(&self) -> f64 {
        self.grid_p.integrate(&self.density)
    }

    /// Total, mean and variance by grid quadrature.
    pub fn moments(&self) -> SfgMoments {
        let w = self.grid_p.to_vec();
        let total = self.total();
        let first: Vec<f64> = w.iter().zip(&self.density).map(|(x, s)| x * s).collect();
        let mean = self.grid_p.integrate(&first) / total;
        let second: Vec<f64> = w
            .iter()
            .zip(&self.density)
            .map(|(x, s)| (x - mean).powi(2) * s)
            .collect();
        SfgMoments {
            total,
            mean,
            variance: self.grid_p.integrate(&second) / total,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfgMoments {
    /// Conversion probability `N_SFG`.
    pub total: f64,
    /// Mean pump frequency, rad/ps.
    pub mean: f64,
    /// Pump frequency variance, (rad/ps)².
    pub variance: f64,
}

/// The grid of all reachable frequency sums of `state`, refined `oversample`
/// times. Pump grids of this form need at most `oversample` distinct
/// resamplings of the state.
pub fn sum_grid(state: &TwoPhotonAmplitude, oversample: usize) -> Result<FrequencyGrid> {
    if oversample == 0 {
        return Err(Error::invalid("oversample must be at least 1"));
    }
    let sums = state.grid_s().sum_lattice(state.grid_i())?;
    FrequencyGrid::from_start(sums.min(), sums.spacing() / oversample as f64, (sums.len() - 1) * oversample + 1)
}

/// Where one anti-diagonal meets the grid: integer sum index `k` plus a
/// fractional idler offset.
#[derive(Debug, Clone, Copy)]
struct LinePlan {
    k: usize,
    frac_key: i64,
}

const FRAC_RESOLUTION: f64 = 1e9;

/// Samples of `φ(ω_s, ω_p − ω_s)` along anti-diagonals, pre-multiplied by
/// the trapezoid weight and spacing so that line integrals become sums.
struct LineSamples {
    omega_s: Vec<f64>,
    weighted: Vec<C64>,
}

impl LineSamples {
    fn integral(&self, weight: impl Fn(f64) -> C64) -> C64 {
        self.omega_s.iter().zip(&self.weighted).map(|(w, v)| weight(*w) * v).sum()
    }
}

fn plan_lines(state: &TwoPhotonAmplitude, omegas: &[f64]) -> Result<Vec<LinePlan>> {
    let (gs, gi) = (state.grid_s(), state.grid_i());
    let sums = gs.sum_lattice(gi)?;
    let d = sums.spacing();
    omegas
        .iter()
        .map(|&w| {
            let x = (w - sums.min()) / d;
            let slack = 1e-9 * sums.len() as f64;
            if !w.is_finite() || x < -slack || x > (sums.len() - 1) as f64 + slack {
                return Err(Error::coverage(
                    format!(
                        "anti-diagonal ω_s + ω_i = {w} leaves the state grid (sums span [{}, {}])",
                        sums.min(),
                        sums.max()
                    ),
                    1.0,
                ));
            }
            let x = x.clamp(0.0, (sums.len() - 1) as f64);
            let mut k = x.floor();
            let mut frac = x - k;
            if frac > 1.0 - 1e-9 {
                k += 1.0;
                frac = 0.0;
            } else if frac < 1e-9 {
                frac = 0.0;
            }
            Ok(LinePlan {
                k: k as usize,
                frac_key: (frac * FRAC_RESOLUTION).round() as i64,
            })
        })
        .collect()
}

fn line_samples(state: &TwoPhotonAmplitude, omegas: &[f64]) -> Result<Vec<LineSamples>> {
    let plans = plan_lines(state, omegas)?;
    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (idx, p) in plans.iter().enumerate() {
        groups.entry(p.frac_key).or_default().push(idx);
    }
    let ws = state.grid_s().to_vec();
    let d = state.grid_s().spacing();
    let (ns, ni) = state.values().shape();

    let extract = |m: &DMatrix<C64>, k: usize| -> LineSamples {
        let lo = (k + 1).saturating_sub(ni);
        let hi = k.min(ns - 1);
        let mut omega_s = Vec::with_capacity(hi + 1 - lo);
        let mut weighted = Vec::with_capacity(hi + 1 - lo);
        for j in lo..=hi {
            let end = j == lo || j == hi;
            let w = if end && hi > lo { 0.5 * d } else { d };
            omega_s.push(ws[j]);
            weighted.push(m[(j, k - j)] * w);
        }
        LineSamples { omega_s, weighted }
    };

    let groups: Vec<(i64, Vec<usize>)> = groups.into_iter().collect();
    let done: Vec<Vec<(usize, LineSamples)>> = groups
        .par_iter()
        .map(|(key, members)| {
            let shifted;
            let m = if *key == 0 {
                state.values()
            } else {
                // out(j, l) = φ(j, l + frac)
                shifted = fourier::shift_cols(state.values(), -(*key as f64) / FRAC_RESOLUTION);
                &shifted
            };
            members.iter().map(|&idx| (idx, extract(m, plans[idx].k))).collect()
        })
        .collect();

    let mut out: Vec<Option<LineSamples>> = (0..omegas.len()).map(|_| None).collect();
    for (idx, s) in done.into_iter().flatten() {
        out[idx] = Some(s);
    }
    Ok(out.into_iter().map(|s| s.expect("every line planned")).collect())
}

/// `S(ω_p) = ε²·|∫dω_s f((2ω_s − ω_p)/√2) φ(ω_s, ω_p − ω_s)|²` on `grid_p`.
pub fn sfg_spectrum_numeric(
    state: &TwoPhotonAmplitude,
    phase_matching: &dyn SpectralProfile,
    eps2: f64,
    grid_p: FrequencyGrid,
) -> Result<PumpSpectrum> {
    if !(eps2 >= 0.0) || !eps2.is_finite() {
        return Err(Error::invalid(format!("ε² must be finite and non-negative, got {eps2}")));
    }
    let omegas = grid_p.to_vec();
    let lines = line_samples(state, &omegas)?;
    let density = lines
        .par_iter()
        .zip(omegas.par_iter())
        .map(|(line, &wp)| {
            let b = line.integral(|ws| phase_matching.amplitude((2.0 * ws - wp) * FRAC_1_SQRT_2));
            eps2 * b.norm_sqr()
        })
        .collect();
    PumpSpectrum::new(grid_p, density)
}

/// Closed-form pump spectrum of the shifted Gaussian state.
pub fn sfg_spectrum_analytic(params: &SourceParams, shift: EncodingShift, omega_p: f64) -> f64 {
    let (sp, sm) = (params.sigma_plus, params.sigma_minus);
    let (dw, dt) = (shift.d_omega, shift.d_t);
    let detune = dw + params.omega0 - omega_p;
    let exponent = (-4.0 * dt * dt * sm * sm - dw * dw / (sm * sm) - 4.0 * detune * detune / (sp * sp)) / 8.0;
    params.eps2() * exponent.exp() / (2.0 * PI.sqrt() * sp)
}

/// Conversion probability `N_SFG = (ε²/√2)·exp(−Δω²/(8σ₋²) − σ₋²Δt²/2)`.
pub fn n_sfg(params: &SourceParams, shift: EncodingShift) -> f64 {
    let sm = params.sigma_minus;
    let exponent = -shift.d_omega.powi(2) / (8.0 * sm * sm) - sm * sm * shift.d_t.powi(2) / 2.0;
    params.eps2() * FRAC_1_SQRT_2 * exponent.exp()
}

pub fn sfg_moments(params: &SourceParams, shift: EncodingShift) -> SfgMoments {
    SfgMoments {
        total: n_sfg(params, shift),
        mean: params.omega0 + shift.d_omega,
        variance: params.sigma_plus.powi(2),
    }
}

/// `P(ω, t) = (1/2π)|∫dω_s e^{i(ω−ω_s)t} φ(ω_s, ω − ω_s)|²`.
pub fn pair_density(state: &TwoPhotonAmplitude, omega: f64, t: f64) -> Result<f64> {
    Ok(pair_density_map(state, &[omega], &[t])?[(0, 0)])
}

/// `P(ω, t)` on every combination; rows follow `omegas`, columns `times`.
pub fn pair_density_map(state: &TwoPhotonAmplitude, omegas: &[f64], times: &[f64]) -> Result<DMatrix<f64>> {
    let lines = line_samples(state, omegas)?;
    let rows: Vec<Vec<f64>> = lines
        .par_iter()
        .zip(omegas.par_iter())
        .map(|(line, &w)| {
            times
                .iter()
                .map(|&t| line.integral(|ws| C64::from_polar(1.0, (w - ws) * t)).norm_sqr() / (2.0 * PI))
                .collect()
        })
        .collect();
    Ok(DMatrix::from_fn(omegas.len(), times.len(), |r, c| rows[r][c]))
}
