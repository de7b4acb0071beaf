//! Two-pulse nonlinear spectroscopy: scans, 2D spectra, the wave-mixing
//! catalog and ensemble statistics.

mod catalog;
mod experiment;
mod fourier;
mod matrix;
mod stats;

pub use catalog::{
    catalog_csv, classify_peaks, enumerate_mixing_peaks, Classification, Field, Interaction, MixingPeak,
    PeakKind, PeakMatch,
};
pub use experiment::{run_2d_experiment, ExperimentConfig, ScanOutcome, System};
pub use fourier::{
    cut, local_maxima, spectral_energy, spectral_weight_split, spectrum_2d, windowed_energy, Cut, CutLine, Maximum,
    SpectrumConfig,
};
pub(crate) use matrix::matrix_text;
pub use matrix::{Axis, Scan2D, Spectrum2D};
pub use stats::{add_noise, ensemble_stats, EnsembleStats, Gridded};
