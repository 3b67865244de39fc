//! Band-limited (DFT phase-ramp) fractional shifts of sampled data.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::{Fft, FftPlanner};

use crate::C64;

/// Plans for one transform length.
pub(crate) struct Shifter {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Shifter {
    pub(crate) fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    /// Phase ramp that delays a length-`len` sequence by `shift` samples.
    fn ramp(&self, shift: f64) -> Vec<C64> {
        let n = self.len;
        (0..n)
            .map(|k| {
                if 2 * k == n {
                    // Nyquist bin: average of the ±n/2 ramps keeps real data real.
                    C64::new((PI * shift).cos(), 0.0)
                } else {
                    let signed = if 2 * k < n { k as f64 } else { k as f64 - n as f64 };
                    C64::from_polar(1.0, -2.0 * PI * signed * shift / n as f64)
                }
            })
            .collect()
    }

    /// `out[j] = x(j - shift)` for the band-limited periodic interpolant of `x`.
    pub(crate) fn shift_in_place(&self, data: &mut [C64], ramp: &[C64]) {
        debug_assert_eq!(data.len(), self.len);
        self.forward.process(data);
        let scale = 1.0 / self.len as f64;
        for (x, r) in data.iter_mut().zip(ramp) {
            *x *= r * scale;
        }
        self.inverse.process(data);
    }
}

/// Returns `m` with every column shifted along the row index by `shift`
/// samples: `out[(j, l)] = m(j - shift, l)`.
pub(crate) fn shift_rows(m: &DMatrix<C64>, shift: f64) -> DMatrix<C64> {
    let shifter = Shifter::new(m.nrows());
    let ramp = shifter.ramp(shift);
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        // columns of a DMatrix are contiguous
        let slice = col.as_mut_slice();
        shifter.shift_in_place(slice, &ramp);
    }
    out
}

/// Returns `m` with every row shifted along the column index by `shift`
/// samples: `out[(j, l)] = m(j, l - shift)`.
pub(crate) fn shift_cols(m: &DMatrix<C64>, shift: f64) -> DMatrix<C64> {
    let shifter = Shifter::new(m.ncols());
    let ramp = shifter.ramp(shift);
    let mut out = m.clone();
    let mut buf = vec![C64::new(0.0, 0.0); m.ncols()];
    for j in 0..m.nrows() {
        for (l, b) in buf.iter_mut().enumerate() {
            *b = out[(j, l)];
        }
        shifter.shift_in_place(&mut buf, &ramp);
        for (l, b) in buf.iter().enumerate() {
            out[(j, l)] = *b;
        }
    }
    out
}

/// Shifts a single sequence by `shift` samples.
#[cfg(test)]
pub(crate) fn shift_vec(data: &[C64], shift: f64) -> Vec<C64> {
    let shifter = Shifter::new(data.len());
    let ramp = shifter.ramp(shift);
    let mut out = data.to_vec();
    shifter.shift_in_place(&mut out, &ramp);
    out
}
