//! The Gaussian SPDC joint spectral amplitude and signal-photon encoding.

use crate::amplitude::{GaussianProfile, TwoPhotonAmplitude};
use crate::error::{Error, Result};
use crate::fourier;
use crate::grid::FrequencyGrid;
use crate::source::{EncodingShift, SourceParams};
use crate::C64;

/// Largest relative norm deviation tolerated from grid truncation or
/// under-resolution of an analytic amplitude.
pub const COVERAGE_TOLERANCE: f64 = 1e-6;

/// Default number of samples per axis.
pub const DEFAULT_POINTS: usize = 512;

/// Half-width, in units of the larger bandwidth, of the default grids.
pub const DEFAULT_WIDTHS: f64 = 6.0;

/// Matched signal and idler grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JsaGrids {
    pub signal: FrequencyGrid,
    pub idler: FrequencyGrid,
}

impl JsaGrids {
    /// Equal grids centered on ω₀/2 with half-width
    /// `6·max(σ₊, σ₋) + |Δω|`, wide enough to hold the coded state.
    pub fn for_source(params: &SourceParams, shift: EncodingShift, n_points: usize) -> Result<Self> {
        let half = DEFAULT_WIDTHS * params.sigma_plus.max(params.sigma_minus) + shift.d_omega.abs();
        let g = FrequencyGrid::new(0.5 * params.omega0, half, n_points)?;
        Ok(Self { signal: g, idler: g })
    }
}

/// Pump spectral amplitude, a square-root Gaussian of width σ₊ at ω₀.
pub fn pump_profile(params: &SourceParams) -> GaussianProfile {
    GaussianProfile {
        center: params.omega0,
        sigma: params.sigma_plus,
    }
}

/// Phase-matching amplitude `f`, a square-root Gaussian of width σ₋ in
/// `(ω_s − ω_i)/√2`.
pub fn phase_matching_profile(params: &SourceParams) -> GaussianProfile {
    GaussianProfile {
        center: 0.0,
        sigma: params.sigma_minus,
    }
}

/// `φ₀(ω_s, ω_i) = h((ω_s+ω_i)/√2) f((ω_s−ω_i)/√2)` sampled on the grids and
/// renormalized to unit trapezoid norm.
///
/// `h(x/√2)` equals `2^{1/4}` times the pump amplitude at `x`, so the
/// frequency sum is distributed with variance σ₊² and the difference with
/// variance 2σ₋².
pub fn gaussian_jsa(params: &SourceParams, grid_s: &FrequencyGrid, grid_i: &FrequencyGrid) -> Result<TwoPhotonAmplitude> {
    params.validate()?;
    let pump = pump_profile(params);
    let pm = phase_matching_profile(params);
    let root4_2 = 2f64.powf(0.25);
    let phi = TwoPhotonAmplitude::from_fn(*grid_s, *grid_i, |ws, wi| {
        let v = root4_2 * pump.value(ws + wi) * pm.value((ws - wi) * std::f64::consts::FRAC_1_SQRT_2);
        C64::new(v, 0.0)
    });
    let norm = phi.square_norm();
    if (1.0 - norm).abs() > COVERAGE_TOLERANCE {
        return Err(Error::coverage(
            format!(
                "Gaussian JSA (σ₊={}, σ₋={}) is truncated or under-resolved on the grid",
                params.sigma_plus, params.sigma_minus
            ),
            (1.0 - norm).abs(),
        ));
    }
    phi.normalized()
}

/// `φ(ω_s − Δω, ω_i)`, resampled with band-limited interpolation.
pub fn shift_frequency(state: &TwoPhotonAmplitude, d_omega: f64) -> Result<TwoPhotonAmplitude> {
    if !d_omega.is_finite() {
        return Err(Error::invalid("frequency shift must be finite"));
    }
    if d_omega == 0.0 {
        return Ok(state.clone());
    }
    let grid = state.grid_s();
    if d_omega.abs() >= grid.half_width() {
        return Err(Error::coverage(
            format!("frequency shift {d_omega} exceeds the signal grid half-width {}", grid.half_width()),
            1.0,
        ));
    }
    let samples = d_omega / grid.spacing();
    // rows that wrap around under the periodic shift, plus one for ringing
    let band = samples.abs().ceil() as usize + 1;
    let lost = state.signal_edge_fraction(band, samples > 0.0);
    if lost > COVERAGE_TOLERANCE {
        return Err(Error::coverage(
            format!("frequency shift {d_omega} pushes the state off the signal grid"),
            lost,
        ));
    }
    Ok(state.with_values(fourier::shift_rows(state.values(), samples)))
}

/// `φ(ω_s, ω_i)·exp(i ω_s Δt)`.
pub fn apply_delay(state: &TwoPhotonAmplitude, d_t: f64) -> TwoPhotonAmplitude {
    if d_t == 0.0 {
        return state.clone();
    }
    let ws = state.grid_s().to_vec();
    let mut values = state.values().clone();
    for (j, w) in ws.iter().enumerate() {
        let phase = C64::from_polar(1.0, w * d_t);
        for v in values.row_mut(j).iter_mut() {
            *v *= phase;
        }
    }
    state.with_values(values)
}

/// Superdense-coding encoding `φ(ω_s − Δω, ω_i)·exp(i ω_s Δt)`.
pub fn encode_shift(state: &TwoPhotonAmplitude, shift: EncodingShift) -> Result<TwoPhotonAmplitude> {
    let shifted = shift_frequency(state, shift.d_omega)?;
    Ok(apply_delay(&shifted, shift.d_t))
}

/// Trapezoid-rule `∬|φ|²`.
pub fn square_norm(state: &TwoPhotonAmplitude) -> f64 {
    state.square_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(sp: f64, sm: f64) -> SourceParams {
        SourceParams::new(sp, sm, 0.0, 0.5).unwrap()
    }

    fn jsa(sp: f64, sm: f64, n: usize) -> TwoPhotonAmplitude {
        let p = params(sp, sm);
        let g = JsaGrids::for_source(&p, EncodingShift::ZERO, n).unwrap();
        gaussian_jsa(&p, &g.signal, &g.idler).unwrap()
    }

    fn max_diff(a: &TwoPhotonAmplitude, b: &TwoPhotonAmplitude) -> f64 {
        a.values()
            .iter()
            .zip(b.values().iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn jsa_is_normalized() {
        for (sp, sm) in [(0.1, 1.0), (0.5, 0.5), (1.0, 0.2), (0.03, 0.6)] {
            let phi = jsa(sp, sm, 256);
            assert!((square_norm(&phi) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn jsa_with_nonzero_pump_center() {
        let p = SourceParams::new(0.2, 0.8, 1.5, 0.5).unwrap();
        let g = JsaGrids::for_source(&p, EncodingShift::ZERO, 256).unwrap();
        let phi = gaussian_jsa(&p, &g.signal, &g.idler).unwrap();
        assert!((phi.signal_mean() - 0.75).abs() < 1e-9);
    }

    /// Rank-1 residual from an SVD of the raw grid matrix.
    fn rank1_residual(phi: &TwoPhotonAmplitude) -> f64 {
        let m = phi.weighted_matrix();
        let svd = m.clone().svd(false, false);
        let s = &svd.singular_values;
        let total: f64 = s.iter().map(|x| x * x).sum();
        (total - s[0] * s[0]).max(0.0).sqrt() / total.sqrt()
    }

    #[test]
    fn jsa_factorizes_when_rotated_widths_match() {
        // sum variance σ₊², difference variance 2σ₋²: separable at σ₊ = √2 σ₋
        let phi = jsa(0.5 * std::f64::consts::SQRT_2, 0.5, 256);
        assert!(rank1_residual(&phi) < 1e-8, "residual {}", rank1_residual(&phi));
        let entangled = jsa(0.5, 0.5, 256);
        assert!(rank1_residual(&entangled) > 1e-2);
    }

    #[test]
    fn jsa_peaks_on_the_anti_diagonal() {
        let p = SourceParams::new(0.01, 1.0, 0.0, 0.5).unwrap();
        let g = FrequencyGrid::new(0.0, 6.0, 1201).unwrap();
        let phi = gaussian_jsa(&p, &g, &g).unwrap();
        let n = g.len();
        for j in (0..n).step_by(97) {
            // the maximum of row j sits at ω_i = −ω_s
            let (arg, _) = phi
                .values()
                .row(j)
                .iter()
                .enumerate()
                .fold((0, 0.0), |acc, (l, v)| if v.norm() > acc.1 { (l, v.norm()) } else { acc });
            assert_eq!(arg, n - 1 - j);
        }
    }

    #[test]
    fn truncated_grid_is_a_coverage_error() {
        let p = params(0.1, 1.0);
        let g = FrequencyGrid::new(0.0, 2.0, 256).unwrap();
        assert!(matches!(gaussian_jsa(&p, &g, &g), Err(Error::Coverage { .. })));
    }

    #[test]
    fn zero_shift_is_identity() {
        let phi = jsa(0.1, 1.0, 128);
        let out = encode_shift(&phi, EncodingShift::ZERO).unwrap();
        assert!(max_diff(&phi, &out) <= 1e-12);
    }

    #[test]
    fn pure_delay_changes_only_phase() {
        let phi = jsa(0.1, 1.0, 128);
        let out = encode_shift(&phi, EncodingShift::new(0.0, 2.5).unwrap()).unwrap();
        for (a, b) in phi.values().iter().zip(out.values().iter()) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
        assert!(max_diff(&phi, &out) > 1e-3);
    }

    #[test]
    fn frequency_shift_moves_signal_marginal() {
        let p = params(0.1, 1.0);
        let shift = EncodingShift::new(0.73, 0.0).unwrap();
        let g = JsaGrids::for_source(&p, shift, 256).unwrap();
        let phi = gaussian_jsa(&p, &g.signal, &g.idler).unwrap();
        let out = encode_shift(&phi, shift).unwrap();
        let moved = out.signal_mean() - phi.signal_mean();
        assert!((moved - 0.73).abs() <= g.signal.spacing());
        assert!((square_norm(&out) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn shift_off_grid_is_a_coverage_error() {
        let phi = jsa(0.1, 1.0, 128);
        let half = phi.grid_s().half_width();
        assert!(matches!(
            encode_shift(&phi, EncodingShift::new(0.5 * half, 0.0).unwrap()),
            Err(Error::Coverage { .. })
        ));
        assert!(matches!(
            encode_shift(&phi, EncodingShift::new(-2.0 * half, 0.0).unwrap()),
            Err(Error::Coverage { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn frequency_shifts_compose(a in -1.0f64..1.0, b in -1.0f64..1.0) {
            let p = params(0.2, 0.6);
            let g = JsaGrids::for_source(&p, EncodingShift::new(2.0, 0.0).unwrap(), 192).unwrap();
            let phi = gaussian_jsa(&p, &g.signal, &g.idler).unwrap();
            let two = shift_frequency(&shift_frequency(&phi, a).unwrap(), b).unwrap();
            let one = shift_frequency(&phi, a + b).unwrap();
            prop_assert!(max_diff(&two, &one) < 1e-6);
        }

        #[test]
        fn delay_and_frequency_shift_commute_in_modulus(dw in -1.0f64..1.0, dt in -4.0f64..4.0) {
            let p = params(0.2, 0.6);
            let g = JsaGrids::for_source(&p, EncodingShift::new(1.0, 0.0).unwrap(), 192).unwrap();
            let phi = gaussian_jsa(&p, &g.signal, &g.idler).unwrap();
            let a = apply_delay(&shift_frequency(&phi, dw).unwrap(), dt);
            let b = shift_frequency(&apply_delay(&phi, dt), dw).unwrap();
            let global = C64::from_polar(1.0, dw * dt);
            for (x, y) in a.values().iter().zip(b.values().iter()) {
                prop_assert!((x.norm() - y.norm()).abs() < 1e-6);
                prop_assert!((x - y * global).norm() < 1e-6);
            }
        }
    }
}
