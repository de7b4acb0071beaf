//! Physical constants (CODATA 2018) and the unit conventions used throughout.
//!
//! Internally time is in picoseconds and angular frequency in rad/ps, so a
//! frequency `nu` in THz corresponds to `2π·nu` rad/ps. Fields are in kV/cm.

use std::f64::consts::PI;

pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
/// meV per THz of ordinary frequency (h / 1 meV · 1e12).
pub const MEV_PER_THZ: f64 = 4.135_667_696;

#[inline]
pub fn thz_to_angular(nu: f64) -> f64 {
    2.0 * PI * nu
}

#[inline]
pub fn angular_to_thz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

#[inline]
pub fn mev_to_angular(e: f64) -> f64 {
    thz_to_angular(e / MEV_PER_THZ)
}

/// Cyclotron angular frequency `eB/m*` in rad/ps.
pub fn cyclotron_angular(b_field: f64, m_eff: f64) -> f64 {
    ELEMENTARY_CHARGE * b_field / (m_eff * ELECTRON_MASS) * 1e-12
}

/// Magnetic length `sqrt(ħ/eB)` in metres.
pub fn magnetic_length(b_field: f64) -> f64 {
    (HBAR / (ELEMENTARY_CHARGE * b_field)).sqrt()
}

/// Landau-cylinder density of states `2eB/ħ` in cm⁻².
pub fn landau_dos_per_cm2(b_field: f64) -> f64 {
    2.0 * ELEMENTARY_CHARGE * b_field / HBAR * 1e-4
}

/// Formats a value with 9 significant digits in `%g` style, the precision
/// used by every text format written by this crate.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".to_string() } else { format!("{x}") };
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}
