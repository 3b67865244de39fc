//! Two-step Schmidt decomposition of the three-wave mixing kernel
//! `K(ω_p; ω_s, ω_i)`.
//!
//! Step one splits the kernel between the pump and the joint signal-idler
//! system, `K = Σ_m sqrt(λ_m) ψ_A,m*(ω_p) ψ_B,m(ω_s, ω_i)`. Step two is an
//! ordinary Schmidt decomposition of every `ψ_B,m`.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector};

use super::{decompose_weighted, sorted_svd, SchmidtSpectrum, Truncation};
use crate::amplitude::{SpectralAmplitude1D, SpectralProfile, TwoPhotonAmplitude};
use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::C64;

/// Largest fraction of `∫|f|²` (or of the pump factor) allowed to fall
/// outside the grids.
const KERNEL_TAIL_TOLERANCE: f64 = 1e-10;

/// Relative spread under which the first-step coefficients count as
/// degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelGrids {
    pub pump: FrequencyGrid,
    pub signal: FrequencyGrid,
    pub idler: FrequencyGrid,
}

impl KernelGrids {
    /// Offset, in samples, of the first pump point on the sum lattice of the
    /// signal and idler grids. Fails unless all spacings agree and the pump
    /// grid sits on that lattice inside the reachable sum range.
    fn pump_offset(&self) -> Result<usize> {
        let d = self.signal.spacing();
        if !self.signal.same_spacing(&self.idler, 1e-9) || !self.signal.same_spacing(&self.pump, 1e-9) {
            return Err(Error::IncompatibleGrids(format!(
                "discrete delta needs equal spacings, got pump {}, signal {}, idler {}",
                self.pump.spacing(),
                d,
                self.idler.spacing()
            )));
        }
        let sums = self.signal.sum_lattice(&self.idler)?;
        let x = (self.pump.min() - sums.min()) / d;
        if (x - x.round()).abs() > 1e-6 {
            return Err(Error::IncompatibleGrids(format!(
                "pump grid is off the sum lattice by {:.3e} samples",
                x - x.round()
            )));
        }
        if !sums.contains(self.pump.min()) || !sums.contains(self.pump.max()) {
            return Err(Error::coverage(
                format!(
                    "pump grid [{}, {}] leaves the reachable sum range [{}, {}]",
                    self.pump.min(),
                    self.pump.max(),
                    sums.min(),
                    sums.max()
                ),
                1.0,
            ));
        }
        Ok(x.round() as usize)
    }
}

/// The discretized kernel unfolded as a pump × (signal ⊗ idler) matrix;
/// column `js·N_i + ji` holds `(ω_s[js], ω_i[ji])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeWaveKernel {
    grids: KernelGrids,
    values: DMatrix<C64>,
}

impl ThreeWaveKernel {
    /// `K = pump(ω_p) · δ(ω_p − ω_s − ω_i) · f((ω_s − ω_i)/√2)` with the delta
    /// realized as a Kronecker delta of weight `1/dω`. Without a pump factor
    /// the kernel is independent of `ω_p` on the pump window.
    pub fn phase_matched(
        grids: KernelGrids,
        phase_matching: &dyn SpectralProfile,
        pump_factor: Option<&dyn SpectralProfile>,
    ) -> Result<Self> {
        let offset = grids.pump_offset()?;
        let (np, ns, ni) = (grids.pump.len(), grids.signal.len(), grids.idler.len());
        let d = grids.signal.spacing();
        let s0 = grids.signal.min();
        let i0 = grids.idler.min();
        let x_at = |j: i64, k: i64| (s0 - i0 + (2 * j - k) as f64 * d) * FRAC_1_SQRT_2;

        // every anti-diagonal must hold the support of f
        let ext = 4 * ns.max(ni) as i64;
        for p in 0..np {
            let k = (offset + p) as i64;
            let lo = (k - ni as i64 + 1).max(0);
            let hi = k.min(ns as i64 - 1);
            let inside: f64 = (lo..=hi).map(|j| phase_matching.amplitude(x_at(j, k)).norm_sqr()).sum();
            let outside: f64 = (lo - ext..lo)
                .chain(hi + 1..=hi + ext)
                .map(|j| phase_matching.amplitude(x_at(j, k)).norm_sqr())
                .sum();
            let lost = outside / (inside + outside);
            if !(lost <= KERNEL_TAIL_TOLERANCE) {
                return Err(Error::coverage(
                    format!(
                        "phase-matching function does not fit the signal/idler grids along ω_p = {}",
                        grids.pump.point(p)
                    ),
                    lost,
                ));
            }
        }

        let pump: Vec<C64> = match pump_factor {
            Some(h) => {
                let values: Vec<C64> = grids.pump.points().map(|w| h.amplitude(w)).collect();
                let inside: f64 = values.iter().map(|v| v.norm_sqr()).sum();
                let dp = grids.pump.spacing();
                let outside: f64 = (1..=ext)
                    .flat_map(|k| {
                        let k = k as f64 * dp;
                        [grids.pump.min() - k, grids.pump.max() + k]
                    })
                    .map(|w| h.amplitude(w).norm_sqr())
                    .sum();
                let lost = outside / (inside + outside);
                if !(lost <= KERNEL_TAIL_TOLERANCE) {
                    return Err(Error::coverage("pump factor extends past the pump grid", lost));
                }
                values
            }
            None => vec![C64::new(1.0, 0.0); np],
        };

        let mut values = DMatrix::<C64>::zeros(np, ns * ni);
        let inv_d = 1.0 / d;
        for p in 0..np {
            let k = offset + p;
            let lo = (k + 1).saturating_sub(ni);
            let hi = k.min(ns - 1);
            for j in lo..=hi {
                let l = k - j;
                let f = phase_matching.amplitude(x_at(j as i64, k as i64));
                values[(p, j * ni + l)] = pump[p] * f * inv_d;
            }
        }
        Ok(Self { grids, values })
    }

    /// Kernel sampled from an arbitrary function of `(ω_p, ω_s, ω_i)`.
    pub fn from_fn(grids: KernelGrids, kernel: impl Fn(f64, f64, f64) -> C64) -> Self {
        let wp = grids.pump.to_vec();
        let ws = grids.signal.to_vec();
        let wi = grids.idler.to_vec();
        let ni = wi.len();
        let values = DMatrix::from_fn(wp.len(), ws.len() * ni, |p, b| kernel(wp[p], ws[b / ni], wi[b % ni]));
        Self { grids, values }
    }

    pub fn grids(&self) -> &KernelGrids {
        &self.grids
    }

    pub fn values(&self) -> &DMatrix<C64> {
        &self.values
    }

    fn weight(&self) -> f64 {
        (self.grids.pump.spacing() * self.grids.signal.spacing() * self.grids.idler.spacing()).sqrt()
    }

    /// Kernel scaled by `sqrt(dω_p dω_s dω_i)`.
    pub fn weighted(&self) -> DMatrix<C64> {
        let w = self.weight();
        self.values.map(|v| v * w)
    }
}

/// Result of the two-step decomposition.
#[derive(Debug, Clone)]
pub struct TwoStepDecomposition {
    grids: KernelGrids,
    lambdas1: Vec<f64>,
    pump_modes: Vec<SpectralAmplitude1D>,
    pair_modes: Vec<TwoPhotonAmplitude>,
    pair_spectra: Vec<SchmidtSpectrum>,
    discarded: f64,
}

impl TwoStepDecomposition {
    /// First-step coefficients `λ_m⁽¹⁾`.
    pub fn lambdas1(&self) -> &[f64] {
        &self.lambdas1
    }

    /// Pump mode functions `ψ_A,m`.
    pub fn pump_modes(&self) -> &[SpectralAmplitude1D] {
        &self.pump_modes
    }

    /// Joint signal-idler mode functions `ψ_B,m`.
    pub fn pair_modes(&self) -> &[TwoPhotonAmplitude] {
        &self.pair_modes
    }

    /// Second-step spectra `λ_{m,n}⁽²⁾` of every `ψ_B,m`.
    pub fn pair_spectra(&self) -> &[SchmidtSpectrum] {
        &self.pair_spectra
    }

    /// First-step weight dropped by truncation.
    pub fn discarded(&self) -> f64 {
        self.discarded
    }

    /// `max λ / min λ` over the retained first-step modes.
    pub fn degeneracy_ratio(&self) -> f64 {
        let max = self.lambdas1.iter().copied().fold(f64::MIN, f64::max);
        let min = self.lambdas1.iter().copied().fold(f64::MAX, f64::min);
        max / min
    }

    /// Kernel rebuilt from both steps:
    /// `Σ_m sqrt(λ_m) ψ_A,m* Σ_n sqrt(λ_{m,n}) ψ_F,m,n ψ_G,m,n`.
    pub fn reconstruct(&self) -> Result<ThreeWaveKernel> {
        let (np, ns, ni) = (self.grids.pump.len(), self.grids.signal.len(), self.grids.idler.len());
        let mut values = DMatrix::<C64>::zeros(np, ns * ni);
        for ((l1, a), spectrum) in self.lambdas1.iter().zip(&self.pump_modes).zip(&self.pair_spectra) {
            let b = spectrum.reconstruct()?;
            let col = DVector::from_iterator(np, a.values().iter().map(|v| v.conj() * l1.sqrt()));
            // row-major flattening of ψ_B to match the unfolding
            let row = DVector::from_iterator(ns * ni, (0..ns * ni).map(|k| b.get(k / ni, k % ni)));
            values += col * row.transpose();
        }
        Ok(ThreeWaveKernel {
            grids: self.grids,
            values,
        })
    }

    /// Relative Frobenius error (quadrature-weighted) of [`Self::reconstruct`].
    pub fn reconstruction_error(&self, kernel: &ThreeWaveKernel) -> Result<f64> {
        let back = self.reconstruct()?;
        let diff: f64 = kernel
            .values
            .iter()
            .zip(back.values.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let norm: f64 = kernel.values.iter().map(|a| a.norm_sqr()).sum();
        Ok((diff / norm).sqrt())
    }
}

/// Two-step decomposition of `kernel`.
///
/// When the retained first-step coefficients are degenerate the pump basis
/// is not unique; if `pump_reference` is given (normally the SPDC pump
/// envelope), the first pump mode is taken along its projection onto the
/// degenerate subspace and the rest follow by Gram–Schmidt.
pub fn two_step_decompose(
    kernel: &ThreeWaveKernel,
    pump_reference: Option<&SpectralAmplitude1D>,
    truncation: Truncation,
) -> Result<TwoStepDecomposition> {
    let grids = kernel.grids;
    let w = kernel.weighted();
    let svd = sorted_svd(&w, true)?;
    let (Some(mut u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::Computation("SVD returned no singular vectors".into()));
    };
    let mut v = v_t.adjoint();
    let all: Vec<f64> = svd.values.iter().map(|s| s * s).collect();
    let keep = truncation.keep(&all);
    if keep == 0 {
        return Err(Error::invalid("kernel is identically zero"));
    }
    let lambdas1 = all[..keep].to_vec();
    let discarded: f64 = all[keep..].iter().sum();
    u = u.columns(0, keep).into_owned();
    v = v.columns(0, keep).into_owned();

    let degenerate = lambdas1[0] / lambdas1[keep - 1] < 1.0 + DEGENERACY_TOLERANCE;
    if let (Some(reference), true) = (pump_reference, degenerate && keep > 1) {
        if reference.grid() != &grids.pump {
            return Err(Error::IncompatibleGrids("pump reference must live on the pump grid".into()));
        }
        let rotation = reference_rotation(&u, reference)?;
        u = &u * &rotation;
        v = &v * &rotation;
    }

    let dp = grids.pump.spacing();
    let dsi = grids.signal.spacing() * grids.idler.spacing();
    let (ns, ni) = (grids.signal.len(), grids.idler.len());
    let mut pump_modes = Vec::with_capacity(keep);
    let mut pair_modes = Vec::with_capacity(keep);
    let mut pair_spectra = Vec::with_capacity(keep);
    for m in 0..keep {
        let a: Vec<C64> = u.column(m).iter().map(|x| x.conj() / dp.sqrt()).collect();
        pump_modes.push(SpectralAmplitude1D::new(grids.pump, a)?);
        // weighted ψ_B,m, reshaped from the row-major unfolding
        let bw = DMatrix::from_fn(ns, ni, |js, ji| v[(js * ni + ji, m)].conj());
        pair_spectra.push(decompose_weighted(&bw, &grids.signal, &grids.idler, truncation, true)?);
        pair_modes.push(TwoPhotonAmplitude::new(grids.signal, grids.idler, bw / C64::new(dsi.sqrt(), 0.0))?);
    }

    Ok(TwoStepDecomposition {
        grids,
        lambdas1,
        pump_modes,
        pair_modes,
        pair_spectra,
        discarded,
    })
}

/// Unitary `C` such that the first column of `U·C` is the (conjugated,
/// weighted) reference projected onto `span(U)`.
fn reference_rotation(u: &DMatrix<C64>, reference: &SpectralAmplitude1D) -> Result<DMatrix<C64>> {
    let dp = reference.grid().spacing();
    let target = DVector::from_iterator(reference.values().len(), reference.values().iter().map(|x| x.conj() * dp.sqrt()));
    let coeffs = u.adjoint() * target;
    let norm = coeffs.norm();
    if norm < 1e-8 {
        return Err(Error::invalid("pump reference is orthogonal to the degenerate pump subspace"));
    }
    let r = u.ncols();
    let mut basis: Vec<DVector<C64>> = vec![coeffs / C64::new(norm, 0.0)];
    for k in 0..r {
        if basis.len() == r {
            break;
        }
        let mut e = DVector::<C64>::zeros(r);
        e[k] = C64::new(1.0, 0.0);
        for b in &basis {
            let proj = b.dotc(&e);
            e -= b * proj;
        }
        let n = e.norm();
        if n > 1e-8 {
            basis.push(e / C64::new(n, 0.0));
        }
    }
    Ok(DMatrix::from_columns(&basis))
}
