use crate::error::{Error, Result};
use crate::landau::{run_landau, LandauParams, RecordOptions};
use crate::pulses::Waveform;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration {
    pub drive_scale: f64,
    /// Peak excitation density reached with that scale (cm⁻²).
    pub achieved_density: f64,
    pub peak_rho_exc: f64,
}

/// Peak `ρ_exc` reached under `probe` with the given drive scale.
pub fn peak_excitation(params: &LandauParams, probe: &Waveform, drive_scale: f64) -> Result<f64> {
    let mut p = params.clone();
    p.cavity.drive_scale = drive_scale;
    let run = run_landau(&p, probe, RecordOptions::default())?;
    Ok(run.trace.rho_exc.iter().fold(0.0, |m, &v| m.max(v)))
}

/// Bisects the drive scale until the peak excitation density under `probe`
/// matches `target_density` (cm⁻²) within `tolerance` (relative).
pub fn calibrate_drive(
    params: &LandauParams,
    target_density: f64,
    probe: &Waveform,
    tolerance: f64,
) -> Result<Calibration> {
    if !(target_density >= 0.0) || !target_density.is_finite() {
        return Err(Error::invalid("target_density", "must be finite and >= 0"));
    }
    if target_density == 0.0 {
        return Ok(Calibration {
            drive_scale: 0.0,
            achieved_density: 0.0,
            peak_rho_exc: 0.0,
        });
    }
    let density = |scale: f64| -> Result<(f64, f64)> {
        let peak = peak_excitation(params, probe, scale)?;
        Ok((params.excitation_density(peak), peak))
    };

    let start = params.cavity.drive_scale;
    let mut lo = 0.0;
    let mut hi = start;
    let mut at_hi = density(hi)?;
    let mut doublings = 0;
    while at_hi.0 < target_density {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        let reached = density(hi);
        match reached {
            Ok(d) if doublings <= 30 => at_hi = d,
            _ => {
                return Err(Error::Calibration(format!(
                    "target {target_density:e} cm^-2 not bracketed: scanned drive scale {start:e}..{hi:e}, \
                     last density {:e} cm^-2",
                    at_hi.0
                )))
            }
        }
    }
    if (at_hi.0 / target_density - 1.0).abs() <= tolerance {
        return Ok(Calibration {
            drive_scale: hi,
            achieved_density: at_hi.0,
            peak_rho_exc: at_hi.1,
        });
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (d, peak) = density(mid)?;
        if (d / target_density - 1.0).abs() <= tolerance {
            return Ok(Calibration {
                drive_scale: mid,
                achieved_density: d,
                peak_rho_exc: peak,
            });
        }
        if d < target_density {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Calibration(format!(
        "bisection did not converge between drive scales {lo:e} and {hi:e}"
    )))
}
