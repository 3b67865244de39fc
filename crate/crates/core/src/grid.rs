//! Uniform angular-frequency axes.

use crate::error::{Error, Result};

/// Smallest grid accepted anywhere in the crate.
pub const MIN_POINTS: usize = 8;

/// Uniform 1-D angular-frequency axis `center ± half_width` with `n_points`
/// samples including both end points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    center: f64,
    half_width: f64,
    n_points: usize,
}

impl FrequencyGrid {
    pub fn new(center: f64, half_width: f64, n_points: usize) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::invalid(format!("grid center must be finite, got {center}")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::invalid(format!(
                "grid half-width must be positive and finite, got {half_width}"
            )));
        }
        if n_points < MIN_POINTS {
            return Err(Error::invalid(format!(
                "grid needs at least {MIN_POINTS} points, got {n_points}"
            )));
        }
        Ok(Self {
            center,
            half_width,
            n_points,
        })
    }

    /// Grid spanning `[min, max]` inclusive.
    pub fn from_bounds(min: f64, max: f64, n_points: usize) -> Result<Self> {
        if !(max > min) {
            return Err(Error::invalid(format!("grid bounds must satisfy min < max, got [{min}, {max}]")));
        }
        Self::new(0.5 * (min + max), 0.5 * (max - min), n_points)
    }

    /// Grid with the given first point and spacing.
    pub fn from_start(start: f64, spacing: f64, n_points: usize) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::invalid(format!("grid spacing must be positive, got {spacing}")));
        }
        let span = spacing * (n_points.max(1) - 1) as f64;
        Self::new(start + 0.5 * span, 0.5 * span, n_points)
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n_points - 1) as f64
    }

    pub fn min(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn max(&self) -> f64 {
        self.center + self.half_width
    }

    pub fn point(&self, index: usize) -> f64 {
        debug_assert!(index < self.n_points);
        if index + 1 == self.n_points {
            self.max()
        } else {
            self.min() + index as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.point(i))
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.points().collect()
    }

    /// Trapezoid weight of sample `index`.
    pub fn trapezoid_weight(&self, index: usize) -> f64 {
        if index == 0 || index + 1 == self.n_points {
            0.5 * self.spacing()
        } else {
            self.spacing()
        }
    }

    /// Trapezoid integral of samples laid out on this grid.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        assert_eq!(samples.len(), self.n_points, "sample count does not match grid");
        let interior: f64 = samples[1..self.n_points - 1].iter().sum();
        self.spacing() * (interior + 0.5 * (samples[0] + samples[self.n_points - 1]))
    }

    /// Continuous index of `omega` on this grid (0 at `min`, `len-1` at `max`).
    pub fn fractional_index(&self, omega: f64) -> f64 {
        (omega - self.min()) / self.spacing()
    }

    pub fn contains(&self, omega: f64) -> bool {
        let tol = 1e-9 * self.spacing();
        omega >= self.min() - tol && omega <= self.max() + tol
    }

    /// True when both grids have the same spacing to `rel_tol`.
    pub fn same_spacing(&self, other: &FrequencyGrid, rel_tol: f64) -> bool {
        (self.spacing() - other.spacing()).abs() <= rel_tol * self.spacing()
    }

    /// The lattice of all pairwise sums `self[j] + other[l]`; requires equal
    /// spacings.
    pub fn sum_lattice(&self, other: &FrequencyGrid) -> Result<FrequencyGrid> {
        if !self.same_spacing(other, 1e-9) {
            return Err(Error::IncompatibleGrids(format!(
                "sum lattice needs equal spacings, got {} and {}",
                self.spacing(),
                other.spacing()
            )));
        }
        FrequencyGrid::from_bounds(self.min() + other.min(), self.max() + other.max(), self.n_points + other.n_points - 1)
    }
}
