use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulation and analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("grid underruns pulse support: need {needed:.3} ps, grid spans {available:.3} ps")]
    GridUnderrun { needed: f64, available: f64 },

    #[error("delay {tau} ps is not an integer multiple of the grid spacing {dt} ps")]
    DelayOffGrid { tau: f64, dt: f64 },

    #[error("incompatible grids: {0}")]
    GridMismatch(String),

    #[error("parse error in {path}: line {line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("integration diverged at t = {time:.6} ps")]
    Diverged { time: f64 },

    #[error("hermiticity drift {drift:e} at t = {time:.6} ps")]
    HermiticityDrift { drift: f64, time: f64 },

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("at nu_c = {nu_c} THz: {source}")]
    SweepPoint {
        nu_c: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("at tau = {tau} ps: {source}")]
    DelayPoint {
        tau: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Analysis(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for numerical blow-ups (divergence or broken invariants).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Diverged { .. } | Error::HermiticityDrift { .. } => true,
            Error::SweepPoint { source, .. } | Error::DelayPoint { source, .. } => {
                source.is_numerical()
            }
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
