//! Sampled one- and two-photon spectral amplitudes.
//!
//! Amplitudes are stored unconjugated. A two-photon amplitude `φ(ω_s, ω_i)` is
//! a dense matrix with the signal frequency on the row index and the idler
//! frequency on the column index; its units are (rad/ps)^-1 so that
//! `∬|φ|² dω_s dω_i` is a probability.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::C64;

/// A complex spectral amplitude that can be evaluated at any frequency.
pub trait SpectralProfile: Sync {
    fn amplitude(&self, omega: f64) -> C64;
}

impl<F> SpectralProfile for F
where
    F: Fn(f64) -> C64 + Sync,
{
    fn amplitude(&self, omega: f64) -> C64 {
        self(omega)
    }
}

/// Square root of a normalized Gaussian density with mean `center` and
/// standard deviation `sigma`: `|g(ω)|²` integrates to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianProfile {
    pub center: f64,
    pub sigma: f64,
}

impl GaussianProfile {
    pub fn new(center: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() || !center.is_finite() {
            return Err(Error::invalid(format!(
                "Gaussian profile needs finite center and positive width, got ({center}, {sigma})"
            )));
        }
        Ok(Self { center, sigma })
    }

    pub fn value(&self, omega: f64) -> f64 {
        let z = (omega - self.center) / self.sigma;
        ((-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * self.sigma)).sqrt()
    }
}

impl SpectralProfile for GaussianProfile {
    fn amplitude(&self, omega: f64) -> C64 {
        C64::new(self.value(omega), 0.0)
    }
}

/// Constant unit profile: the infinite-bandwidth phase-matching limit.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FlatProfile;

impl SpectralProfile for FlatProfile {
    fn amplitude(&self, _omega: f64) -> C64 {
        C64::new(1.0, 0.0)
    }
}

/// A one-photon amplitude sampled on a grid, in (rad/ps)^(-1/2).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAmplitude1D {
    grid: FrequencyGrid,
    values: Vec<C64>,
}

impl SpectralAmplitude1D {
    pub fn new(grid: FrequencyGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "amplitude has {} samples for a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::invalid("amplitude samples must be finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_profile(grid: FrequencyGrid, profile: &dyn SpectralProfile) -> Self {
        let values = grid.points().map(|w| profile.amplitude(w)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    /// Trapezoid-rule `∫|v|² dω`.
    pub fn square_norm(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        self.grid.integrate(&sq)
    }

    /// Discrete inner product `Σ conj(a) b · spacing`.
    pub fn inner(&self, other: &SpectralAmplitude1D) -> C64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        let s: C64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        s * self.grid.spacing()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.square_norm();
        if !(n > 0.0) {
            return Err(Error::invalid("cannot normalize a zero amplitude"));
        }
        let s = 1.0 / n.sqrt();
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
        })
    }
}

impl SpectralProfile for SpectralAmplitude1D {
    /// Whittaker–Shannon interpolation of the samples; zero outside the grid.
    fn amplitude(&self, omega: f64) -> C64 {
        if !self.grid.contains(omega) {
            return C64::new(0.0, 0.0);
        }
        let x = self.grid.fractional_index(omega);
        let nearest = x.round();
        if (x - nearest).abs() < 1e-12 {
            return self.values[nearest as usize];
        }
        self.values
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let u = PI * (x - j as f64);
                v * (u.sin() / u)
            })
            .sum()
    }
}

/// A two-photon amplitude `φ(ω_s, ω_i)` on a signal × idler grid pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonAmplitude {
    grid_s: FrequencyGrid,
    grid_i: FrequencyGrid,
    values: DMatrix<C64>,
}

impl TwoPhotonAmplitude {
    pub fn new(grid_s: FrequencyGrid, grid_i: FrequencyGrid, values: DMatrix<C64>) -> Result<Self> {
        if values.nrows() != grid_s.len() || values.ncols() != grid_i.len() {
            return Err(Error::invalid(format!(
                "amplitude matrix is {}x{} but grids are {}x{}",
                values.nrows(),
                values.ncols(),
                grid_s.len(),
                grid_i.len()
            )));
        }
        Ok(Self {
            grid_s,
            grid_i,
            values,
        })
    }

    pub fn from_fn(
        grid_s: FrequencyGrid,
        grid_i: FrequencyGrid,
        f: impl Fn(f64, f64) -> C64,
    ) -> Self {
        let ws = grid_s.to_vec();
        let wi = grid_i.to_vec();
        let values = DMatrix::from_fn(ws.len(), wi.len(), |j, l| f(ws[j], wi[l]));
        Self {
            grid_s,
            grid_i,
            values,
        }
    }

    /// Product state `g(ω_s) h(ω_i)`.
    pub fn product(signal: &SpectralAmplitude1D, idler: &SpectralAmplitude1D) -> Self {
        let values = DMatrix::from_fn(signal.grid.len(), idler.grid.len(), |j, l| {
            signal.values[j] * idler.values[l]
        });
        Self {
            grid_s: signal.grid,
            grid_i: idler.grid,
            values,
        }
    }

    pub fn zeros(grid_s: FrequencyGrid, grid_i: FrequencyGrid) -> Self {
        Self {
            grid_s,
            grid_i,
            values: DMatrix::zeros(grid_s.len(), grid_i.len()),
        }
    }

    pub fn grid_s(&self) -> &FrequencyGrid {
        &self.grid_s
    }

    pub fn grid_i(&self) -> &FrequencyGrid {
        &self.grid_i
    }

    pub fn values(&self) -> &DMatrix<C64> {
        &self.values
    }

    pub fn get(&self, js: usize, ji: usize) -> C64 {
        self.values[(js, ji)]
    }

    pub(crate) fn with_values(&self, values: DMatrix<C64>) -> Self {
        debug_assert_eq!(values.shape(), self.values.shape());
        Self {
            grid_s: self.grid_s,
            grid_i: self.grid_i,
            values,
        }
    }

    /// Trapezoid-rule `∬|φ|² dω_s dω_i`.
    pub fn square_norm(&self) -> f64 {
        let (ns, ni) = self.values.shape();
        let mut total = 0.0;
        for l in 0..ni {
            let wi = self.grid_i.trapezoid_weight(l);
            for j in 0..ns {
                total += self.grid_s.trapezoid_weight(j) * wi * self.values[(j, l)].norm_sqr();
            }
        }
        total
    }

    pub fn scaled(&self, factor: C64) -> Self {
        self.with_values(self.values.map(|v| v * factor))
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.square_norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::invalid("cannot normalize a zero or non-finite amplitude"));
        }
        Ok(self.scaled(C64::new(1.0 / n.sqrt(), 0.0)))
    }

    /// Matrix scaled by `sqrt(dω_s dω_i)` so that its Frobenius norm squared
    /// is the rectangle-rule square norm and its singular values are the
    /// Schmidt coefficients.
    pub fn weighted_matrix(&self) -> DMatrix<C64> {
        let w = (self.grid_s.spacing() * self.grid_i.spacing()).sqrt();
        self.values.map(|v| v * w)
    }

    /// Probability-weighted mean of the signal frequency.
    pub fn signal_mean(&self) -> f64 {
        let ws = self.grid_s.to_vec();
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, w) in ws.iter().enumerate() {
            let row: f64 = self.values.row(j).iter().map(|v| v.norm_sqr()).sum();
            num += w * row;
            den += row;
        }
        num / den
    }

    /// Fraction of `Σ|φ|²` held in the first `rows` and last `rows` signal rows.
    pub(crate) fn signal_edge_fraction(&self, rows: usize, upper: bool) -> f64 {
        let ns = self.values.nrows();
        let rows = rows.min(ns);
        let total: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let range = if upper { ns - rows..ns } else { 0..rows };
        let edge: f64 = range
            .map(|j| self.values.row(j).iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum();
        edge / total
    }
}
