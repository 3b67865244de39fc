//! Numerical simulation of joint time-frequency entanglement measurement by
//! sum-frequency generation (SFG).
//!
//! The crate is organized bottom-up:
//!
//! - [`grid`] and [`amplitude`]: uniform angular-frequency grids and sampled
//!   one- and two-photon spectral amplitudes.
//! - [`jsa`]: the Gaussian SPDC joint spectral amplitude and the signal-photon
//!   frequency/time encoding used by superdense coding.
//! - [`schmidt`]: Schmidt decomposition of two-photon amplitudes and the
//!   two-step decomposition of the three-wave mixing kernel.
//! - [`sfg`]: the SFG pump-photon spectrum (numeric line integrals and the
//!   Gaussian closed form) and the frequency-sum / time-difference density.
//! - [`sdc`]: Monte Carlo simulation of the SFG feedback-loop superdense
//!   coding receiver.
//! - [`qi`]: quantum illumination detection probabilities, a mode-level
//!   first-order oracle, and seeded hypothesis-test simulation.
//!
//! Units: angular frequencies in rad/ps, times in ps.

// `!(x > 0.0)` style checks are used on purpose so NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amplitude;
pub mod error;
pub mod grid;
pub mod jsa;
pub mod qi;
pub mod rng;
pub mod schmidt;
pub mod sdc;
pub mod sfg;
pub mod source;
pub mod stats;

mod fourier;

pub use amplitude::{
    FlatProfile, GaussianProfile, SpectralAmplitude1D, SpectralProfile, TwoPhotonAmplitude,
};
pub use error::{Error, Result};
pub use grid::FrequencyGrid;
pub use jsa::{encode_shift, gaussian_jsa, square_norm, JsaGrids};
pub use qi::{
    pd_ci, pd_ci_matched, pd_qi, qi_expectation_oracle, run_discrimination, DiscriminationConfig,
    NoiseReference, Protocol, QiChannel, QiDiscriminationResult, QiSource,
};
pub use schmidt::{
    schmidt_decompose, schmidt_number, two_step_decompose, KernelGrids, SchmidtSpectrum,
    ThreeWaveKernel, Truncation, TwoStepDecomposition,
};
pub use sdc::{
    decode, run_sdc_ensemble, run_sdc_trial, SdcConfig, SdcEnsemble, SdcStats, SdcTrialResult,
};
pub use sfg::{
    n_sfg, pair_density, sfg_moments, sfg_spectrum_analytic, sfg_spectrum_numeric, PumpSpectrum,
    SfgMoments,
};
pub use source::{EncodingShift, SourceParams};

/// Complex scalar used for all amplitudes.
pub type C64 = num_complex::Complex64;
