//! Schmidt decomposition of two-photon amplitudes.
//!
//! A sampled amplitude is turned into the matrix `φ(ω_s, ω_i)·sqrt(dω_s dω_i)`;
//! its singular values are the Schmidt coefficients `sqrt(λ_n)` and its
//! singular vectors, divided by `sqrt(dω)`, are the signal and idler mode
//! functions, orthonormal under `Σ conj(a)·b·dω`.

mod two_step;

use nalgebra::{DMatrix, DVector};

pub use two_step::{two_step_decompose, KernelGrids, ThreeWaveKernel, TwoStepDecomposition};

use crate::amplitude::{SpectralAmplitude1D, TwoPhotonAmplitude};
use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::C64;

/// Tolerance on `Σλ = 1` for spectra built from explicit coefficients.
pub const LAMBDA_SUM_TOLERANCE: f64 = 1e-8;

/// Relative singular value below which a mode counts as zero.
const ZERO_MODE: f64 = 1e-14;

const SVD_MAX_ITERATIONS: usize = 100_000;

/// How many Schmidt modes to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Keep the fewest modes whose cumulative weight reaches `1 − tail` of
    /// the total.
    Energy(f64),
    /// Keep at most this many modes.
    Rank(usize),
    /// Keep every mode with a non-negligible coefficient.
    Full,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Energy(1e-10)
    }
}

impl Truncation {
    /// Number of leading entries of `lambdas` (sorted descending) to keep.
    pub(crate) fn keep(&self, lambdas: &[f64]) -> usize {
        let total: f64 = lambdas.iter().sum();
        let top = lambdas.first().copied().unwrap_or(0.0);
        let nonzero = lambdas
            .iter()
            .take_while(|&&l| l > top * ZERO_MODE * ZERO_MODE)
            .count();
        match *self {
            Truncation::Full => nonzero,
            Truncation::Rank(r) => r.min(nonzero),
            Truncation::Energy(tail) => {
                let target = (1.0 - tail) * total;
                let mut acc = 0.0;
                for (k, l) in lambdas.iter().enumerate().take(nonzero) {
                    acc += l;
                    if acc >= target {
                        return k + 1;
                    }
                }
                nonzero
            }
        }
    }
}

/// Squared Schmidt coefficients with (optionally) their mode functions.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtSpectrum {
    lambdas: Vec<f64>,
    modes_s: Vec<SpectralAmplitude1D>,
    modes_i: Vec<SpectralAmplitude1D>,
    discarded: f64,
}

impl SchmidtSpectrum {
    /// Spectrum from explicit coefficients, e.g. for illumination sources.
    /// The coefficients must lie in `[0, 1]` and sum to one.
    pub fn from_lambdas(mut lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::invalid("Schmidt spectrum needs at least one coefficient"));
        }
        if let Some(bad) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(Error::invalid(format!("Schmidt coefficient {bad} is outside [0, 1]")));
        }
        let sum: f64 = lambdas.iter().sum();
        if (sum - 1.0).abs() > LAMBDA_SUM_TOLERANCE {
            return Err(Error::invalid(format!(
                "Schmidt coefficients sum to {sum}, expected 1 ± {LAMBDA_SUM_TOLERANCE:e}"
            )));
        }
        lambdas.sort_by(|a, b| b.total_cmp(a));
        Ok(Self {
            lambdas,
            modes_s: Vec::new(),
            modes_i: Vec::new(),
            discarded: 0.0,
        })
    }

    /// `k` equally weighted modes, Schmidt number exactly `k`.
    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("uniform spectrum needs at least one mode"));
        }
        Self::from_lambdas(vec![1.0 / k as f64; k])
    }

    /// Geometric spectrum `λ_n = (1 − q) qⁿ` truncated to `n_modes`, with
    /// the tail folded into nothing: the caller picks `n_modes` large enough.
    pub fn geometric(q: f64, n_modes: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&q) {
            return Err(Error::invalid(format!("geometric ratio must lie in [0, 1), got {q}")));
        }
        let lambdas: Vec<f64> = (0..n_modes).map(|n| (1.0 - q) * q.powi(n as i32)).collect();
        let tail = q.powi(n_modes as i32);
        let mut s = Self::from_lambdas_unchecked(lambdas);
        s.discarded = tail;
        Ok(s)
    }

    fn from_lambdas_unchecked(lambdas: Vec<f64>) -> Self {
        Self {
            lambdas,
            modes_s: Vec::new(),
            modes_i: Vec::new(),
            discarded: 0.0,
        }
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn modes_s(&self) -> &[SpectralAmplitude1D] {
        &self.modes_s
    }

    pub fn modes_i(&self) -> &[SpectralAmplitude1D] {
        &self.modes_i
    }

    pub fn has_modes(&self) -> bool {
        !self.modes_s.is_empty()
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Weight removed by truncation.
    pub fn discarded(&self) -> f64 {
        self.discarded
    }

    /// Sum of the retained coefficients.
    pub fn total(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    pub fn schmidt_number(&self) -> f64 {
        schmidt_number(&self.lambdas)
    }

    /// Keep only the first `k` modes, moving the rest into the discarded tail.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.len());
        let dropped: f64 = self.lambdas[k..].iter().sum();
        Self {
            lambdas: self.lambdas[..k].to_vec(),
            modes_s: self.modes_s.iter().take(k).cloned().collect(),
            modes_i: self.modes_i.iter().take(k).cloned().collect(),
            discarded: self.discarded + dropped,
        }
    }

    /// `Σ_n sqrt(λ_n) ψ_F,n(ω_s) ψ_G,n(ω_i)` on the mode grids.
    pub fn reconstruct(&self) -> Result<TwoPhotonAmplitude> {
        let (Some(fs), Some(gs)) = (self.modes_s.first(), self.modes_i.first()) else {
            return Err(Error::invalid("spectrum carries no mode functions"));
        };
        let (ns, ni) = (fs.grid().len(), gs.grid().len());
        let mut m = DMatrix::<C64>::zeros(ns, ni);
        for ((l, f), g) in self.lambdas.iter().zip(&self.modes_s).zip(&self.modes_i) {
            let a = DVector::from_column_slice(f.values()) * C64::new(l.sqrt(), 0.0);
            let b = DVector::from_column_slice(g.values());
            m += a * b.transpose();
        }
        TwoPhotonAmplitude::new(*fs.grid(), *gs.grid(), m)
    }
}

/// `1 / Σ λ_n²`.
pub fn schmidt_number(lambdas: &[f64]) -> f64 {
    1.0 / lambdas.iter().map(|l| l * l).sum::<f64>()
}

/// Schmidt decomposition of a normalized two-photon amplitude.
pub fn schmidt_decompose(state: &TwoPhotonAmplitude, truncation: Truncation) -> Result<SchmidtSpectrum> {
    check_normalized(state)?;
    decompose_weighted(&state.weighted_matrix(), state.grid_s(), state.grid_i(), truncation, true)
}

/// Schmidt coefficients only, skipping the singular vectors.
pub fn schmidt_coefficients(state: &TwoPhotonAmplitude, truncation: Truncation) -> Result<SchmidtSpectrum> {
    check_normalized(state)?;
    decompose_weighted(&state.weighted_matrix(), state.grid_s(), state.grid_i(), truncation, false)
}

fn check_normalized(state: &TwoPhotonAmplitude) -> Result<()> {
    let n = state.square_norm();
    if (n - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!("Schmidt decomposition needs a normalized state, norm is {n}")));
    }
    Ok(())
}

/// Thin SVD with singular values sorted descending.
pub(crate) struct SortedSvd {
    pub values: Vec<f64>,
    pub u: Option<DMatrix<C64>>,
    pub v_t: Option<DMatrix<C64>>,
}

pub(crate) fn sorted_svd(m: &DMatrix<C64>, vectors: bool) -> Result<SortedSvd> {
    let is_real = m.iter().all(|v| v.im == 0.0);
    let (values, u, v_t) = if is_real {
        let r = m.map(|v| v.re);
        let svd = r
            .try_svd(vectors, vectors, f64::EPSILON, SVD_MAX_ITERATIONS)
            .ok_or_else(|| Error::Computation("SVD did not converge".into()))?;
        (
            svd.singular_values.as_slice().to_vec(),
            svd.u.map(|u| u.map(|x| C64::new(x, 0.0))),
            svd.v_t.map(|v| v.map(|x| C64::new(x, 0.0))),
        )
    } else {
        let svd = m
            .clone()
            .try_svd(vectors, vectors, f64::EPSILON, SVD_MAX_ITERATIONS)
            .ok_or_else(|| Error::Computation("SVD did not converge".into()))?;
        (svd.singular_values.as_slice().to_vec(), svd.u, svd.v_t)
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let sorted = order.iter().map(|&k| values[k]).collect();
    let u = u.map(|u| DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]));
    let v_t = v_t.map(|v| DMatrix::from_fn(order.len(), v.ncols(), |r, c| v[(order[r], c)]));
    Ok(SortedSvd {
        values: sorted,
        u,
        v_t,
    })
}

/// Decomposes an already weighted matrix `φ·sqrt(dω_s dω_i)`.
pub(crate) fn decompose_weighted(
    m: &DMatrix<C64>,
    grid_s: &FrequencyGrid,
    grid_i: &FrequencyGrid,
    truncation: Truncation,
    with_modes: bool,
) -> Result<SchmidtSpectrum> {
    let svd = sorted_svd(m, with_modes)?;
    let all: Vec<f64> = svd.values.iter().map(|s| s * s).collect();
    let keep = truncation.keep(&all);
    let lambdas = all[..keep].to_vec();
    let discarded: f64 = all[keep..].iter().sum();

    let (mut modes_s, mut modes_i) = (Vec::new(), Vec::new());
    if let (Some(u), Some(v_t)) = (svd.u, svd.v_t) {
        let rs = 1.0 / grid_s.spacing().sqrt();
        let ri = 1.0 / grid_i.spacing().sqrt();
        for n in 0..keep {
            let f: Vec<C64> = u.column(n).iter().map(|x| x * rs).collect();
            let g: Vec<C64> = v_t.row(n).iter().map(|x| x * ri).collect();
            modes_s.push(SpectralAmplitude1D::new(*grid_s, f)?);
            modes_i.push(SpectralAmplitude1D::new(*grid_i, g)?);
        }
    }
    Ok(SchmidtSpectrum {
        lambdas,
        modes_s,
        modes_i,
        discarded,
    })
}
