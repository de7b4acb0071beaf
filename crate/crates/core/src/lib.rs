//! Ultrastrong coupling of cavity modes to a Landau-quantized electron gas:
//! polariton spectra, pulse synthesis, bosonic and density-matrix dynamics,
//! and two-dimensional THz spectroscopy.

pub mod bosonic;
pub mod error;
pub mod hopfield;
pub mod landau;
pub mod pulses;
pub mod scenario;
mod rk4;
pub mod spectroscopy;
pub mod units;

pub use error::{Error, Result};
