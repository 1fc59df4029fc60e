//! Transmutation between conservative continuous-time evolutions and their
//! conservative time-discretizations, on diagonalized spectral models.
//!
//! The modules build on each other bottom-up: [`spectral`] holds spectra and
//! states, [`schemes`] the dispersion functions `f`, [`dft`] the scale-`tau`
//! Fourier pair, [`kernels`] the forward and reverse kernels, and
//! [`observability`] the Gramian based constants.

// `!(x > 0.0)` also rejects NaN, which is the point of those checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dft;
pub mod error;
pub mod kernels;
pub mod observability;
pub mod quadrature;
pub mod schemes;
pub mod spectral;

pub use error::{Error, Result};
pub use schemes::Scheme;
pub use spectral::{FilterBand, ModeLabel, Spectrum, State};

pub use num_complex::Complex64;

/// Crate version, echoed into experiment metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
