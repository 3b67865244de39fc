//! Gaussian SPDC source parameters and the superdense-coding message shift.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};

/// Per-pass conversion efficiency of a 1 mm semiconductor waveguide.
pub const WAVEGUIDE_EPS2_LAMBDA0: f64 = 2.1e-8;

/// First-step Schmidt weight of a pump-independent phase-matching kernel.
/// Relates the interaction strength ε² to the measurable per-pass efficiency
/// `eps2_lambda0 = ε² · FIRST_STEP_WEIGHT`.
pub const FIRST_STEP_WEIGHT: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Gaussian SPDC source: pump bandwidth σ₊, photon (phase-matching)
/// bandwidth σ₋, pump center ω₀ and per-pass conversion efficiency ε²λ₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParams {
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub omega0: f64,
    pub eps2_lambda0: f64,
}

impl SourceParams {
    pub fn new(sigma_plus: f64, sigma_minus: f64, omega0: f64, eps2_lambda0: f64) -> Result<Self> {
        let params = Self {
            sigma_plus,
            sigma_minus,
            omega0,
            eps2_lambda0,
        };
        params.validate()?;
        if sigma_plus >= sigma_minus {
            log::warn!(
                "sigma_plus ({sigma_plus}) >= sigma_minus ({sigma_minus}): source is outside the strong-entanglement regime"
            );
        }
        Ok(params)
    }

    /// Source with ω₀ = 0 and the waveguide efficiency.
    pub fn with_bandwidths(sigma_plus: f64, sigma_minus: f64) -> Result<Self> {
        Self::new(sigma_plus, sigma_minus, 0.0, WAVEGUIDE_EPS2_LAMBDA0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_plus > 0.0 && self.sigma_plus.is_finite()) {
            return Err(Error::invalid(format!("sigma_plus must be positive, got {}", self.sigma_plus)));
        }
        if !(self.sigma_minus > 0.0 && self.sigma_minus.is_finite()) {
            return Err(Error::invalid(format!("sigma_minus must be positive, got {}", self.sigma_minus)));
        }
        if !self.omega0.is_finite() {
            return Err(Error::invalid("omega0 must be finite"));
        }
        if !(self.eps2_lambda0 > 0.0 && self.eps2_lambda0 <= 1.0) {
            return Err(Error::invalid(format!(
                "eps2_lambda0 must lie in (0, 1], got {}",
                self.eps2_lambda0
            )));
        }
        Ok(())
    }

    /// Interaction strength ε².
    pub fn eps2(&self) -> f64 {
        self.eps2_lambda0 * SQRT_2
    }

    pub fn with_eps2_lambda0(mut self, eps2_lambda0: f64) -> Result<Self> {
        self.eps2_lambda0 = eps2_lambda0;
        self.validate()?;
        Ok(self)
    }

    /// σ₋/σ₊, the entanglement-strength ratio.
    pub fn bandwidth_ratio(&self) -> f64 {
        self.sigma_minus / self.sigma_plus
    }
}

/// Frequency shift Δω (rad/ps) and time shift Δt (ps) applied to the signal
/// photon.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EncodingShift {
    pub d_omega: f64,
    pub d_t: f64,
}

impl EncodingShift {
    pub const ZERO: EncodingShift = EncodingShift { d_omega: 0.0, d_t: 0.0 };

    pub fn new(d_omega: f64, d_t: f64) -> Result<Self> {
        if !d_omega.is_finite() || !d_t.is_finite() {
            return Err(Error::invalid(format!("encoding shift must be finite, got ({d_omega}, {d_t})")));
        }
        Ok(Self { d_omega, d_t })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(SourceParams::new(0.1, 1.0, 0.0, 2.1e-8).is_ok());
        assert!(SourceParams::new(0.0, 1.0, 0.0, 0.1).is_err());
        assert!(SourceParams::new(0.1, -1.0, 0.0, 0.1).is_err());
        assert!(SourceParams::new(0.1, 1.0, 0.0, 0.0).is_err());
        assert!(SourceParams::new(0.1, 1.0, 0.0, 1.5).is_err());
        assert!(SourceParams::new(0.1, 1.0, f64::INFINITY, 0.5).is_err());
        // weak entanglement only warns
        assert!(SourceParams::new(1.0, 0.5, 0.0, 0.5).is_ok());
    }

    #[test]
    fn eps2_round_trip() {
        let p = SourceParams::new(0.1, 1.0, 0.0, FIRST_STEP_WEIGHT).unwrap();
        assert!((p.eps2() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shift_must_be_finite() {
        assert!(EncodingShift::new(1.0, -2.0).is_ok());
        assert!(EncodingShift::new(f64::NAN, 0.0).is_err());
    }
}
