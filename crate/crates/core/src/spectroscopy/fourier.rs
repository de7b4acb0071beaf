//! 2D transform of a delay scan.
//!
//! `F(ν_t, ν_τ) = Σ_τ Σ_t w(τ) w(t) E_nl(t, τ) · exp(−2πi ν_t t) · exp(+2πi ν_τ τ)`
//!
//! With this sign choice a signal `exp(2πi ν (t − τ))` radiated by a field
//! entering at delay `τ` lands at `(ν, ν)`, so pump-probe signals of a mode
//! sit at `(ν, 0)` and `(ν, ν)` and four-wave mixing at `(ν, −ν)` and
//! `(ν, 2ν)`. Only `ν_t ≥ 0` is kept; the other half is its conjugate mirror.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::units::fmt_sig9;

use super::matrix::{Axis, Scan2D, Spectrum2D};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumConfig {
    /// Fraction of each axis, at its end, covered by a raised-cosine taper.
    pub taper_fraction: f64,
    /// Zero-padding factor on both axes.
    pub padding: usize,
    pub keep_complex: bool,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            taper_fraction: 0.15,
            padding: 4,
            keep_complex: true,
        }
    }
}

impl SpectrumConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.taper_fraction) {
            return Err(Error::invalid("taper_fraction", "must lie in [0, 1)"));
        }
        if self.padding == 0 {
            return Err(Error::invalid("padding", "must be >= 1"));
        }
        Ok(())
    }
}

/// Flat weights with a raised-cosine roll-off to zero over the final
/// `fraction` of `n` samples.
fn taper(n: usize, fraction: f64) -> Vec<f64> {
    let m = (fraction * n as f64).round() as usize;
    (0..n)
        .map(|i| {
            if m == 0 || i + m < n {
                1.0
            } else {
                let u = (i + m + 1 - n) as f64 / m as f64;
                0.5 * (1.0 + (PI * u).cos())
            }
        })
        .collect()
}

fn padded_lengths(scan: &Scan2D, config: &SpectrumConfig) -> (usize, usize) {
    let pt = config.padding * scan.t.count;
    (pt + pt % 2, config.padding * scan.tau.count)
}

/// `Σ |w E|²` of the windowed scan, the time-domain side of Parseval's
/// relation for [`spectral_energy`].
pub fn windowed_energy(scan: &Scan2D, config: &SpectrumConfig) -> f64 {
    let wt = taper(scan.t.count, config.taper_fraction);
    let wtau = taper(scan.tau.count, config.taper_fraction);
    let mut acc = 0.0;
    for (j, wj) in wtau.iter().enumerate() {
        for (k, wk) in wt.iter().enumerate() {
            let v = wj * wk * scan.get(j, k);
            acc += v * v;
        }
    }
    acc
}

/// Energy of the raw (unnormalized) transform over the full plane, divided
/// by the padded transform size.
pub fn spectral_energy(spectrum: &Spectrum2D) -> f64 {
    let pt = 2 * (spectrum.nu_t.count - 1);
    let ptau = spectrum.nu_tau.count;
    let norm = spectrum.normalization;
    let mut acc = 0.0;
    for j in 0..ptau {
        for k in 0..spectrum.nu_t.count {
            let weight = if k == 0 || 2 * k == pt { 1.0 } else { 2.0 };
            let a = spectrum.get(j, k) * norm;
            acc += weight * a * a;
        }
    }
    acc / (pt * ptau) as f64
}

/// Spectral energy at `ν_t ≤ split` and `ν_t > split` (same weighting as
/// [`spectral_energy`]).
pub fn spectral_weight_split(spectrum: &Spectrum2D, split: f64) -> (f64, f64) {
    let pt = 2 * (spectrum.nu_t.count - 1);
    let norm = spectrum.normalization;
    let (mut below, mut above) = (0.0, 0.0);
    for j in 0..spectrum.nu_tau.count {
        for k in 0..spectrum.nu_t.count {
            let weight = if k == 0 || 2 * k == pt { 1.0 } else { 2.0 };
            let a = spectrum.get(j, k) * norm;
            if spectrum.nu_t.value(k) > split {
                above += weight * a * a;
            } else {
                below += weight * a * a;
            }
        }
    }
    let n = (pt * spectrum.nu_tau.count) as f64;
    (below / n, above / n)
}

pub fn spectrum_2d(scan: &Scan2D, config: &SpectrumConfig) -> Result<Spectrum2D> {
    config.validate()?;
    if scan.t.count < 2 {
        return Err(Error::invalid("scan", "needs at least two time samples"));
    }
    let (pt, ptau) = padded_lengths(scan, config);
    let nt = scan.t.count;
    let ntau = scan.tau.count;
    let wt = taper(nt, config.taper_fraction);
    let wtau = taper(ntau, config.taper_fraction);
    let half = pt / 2 + 1;

    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(pt);
    let inv = planner.plan_fft_inverse(ptau);

    // Rows: transform over t, keep the non-negative half.
    let mut columns = vec![Complex64::new(0.0, 0.0); half * ptau];
    let mut buf = vec![Complex64::new(0.0, 0.0); pt];
    for j in 0..ntau {
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for k in 0..nt {
            buf[k] = Complex64::new(wtau[j] * wt[k] * scan.get(j, k), 0.0);
        }
        fwd.process(&mut buf);
        for k in 0..half {
            columns[k * ptau + j] = buf[k];
        }
    }
    for col in columns.chunks_mut(ptau) {
        inv.process(col);
    }

    let lo = -((ptau / 2) as i64);
    let dnu_tau = 1.0 / (ptau as f64 * scan.tau.step);
    let dnu_t = 1.0 / (pt as f64 * scan.t.step);
    let mut raw = vec![Complex64::new(0.0, 0.0); half * ptau];
    for r in 0..ptau {
        let s = (lo + r as i64).rem_euclid(ptau as i64) as usize;
        for k in 0..half {
            raw[r * half + k] = columns[k * ptau + s];
        }
    }
    let peak = raw.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
    let amplitude = raw.iter().map(|c| c.norm() * scale).collect();
    let complex = config
        .keep_complex
        .then(|| raw.iter().map(|c| c * scale).collect());
    Ok(Spectrum2D {
        nu_tau: Axis::new("nu_tau", "THz", lo as f64 * dnu_tau, dnu_tau, ptau)?,
        nu_t: Axis::new("nu_t", "THz", 0.0, dnu_t, half)?,
        amplitude,
        complex,
        normalization: peak,
        resolution: (
            1.0 / (nt as f64 * scan.t.step),
            1.0 / (ntau as f64 * scan.tau.step),
        ),
    })
}

/// A local maximum of the amplitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Maximum {
    pub nu_t: f64,
    pub nu_tau: f64,
    pub amplitude: f64,
    /// `(row, column)` = `(ν_τ index, ν_t index)`.
    pub index: (usize, usize),
}

/// Points exceeding all eight neighbours (ties resolved toward the first in
/// row-major order) with amplitude above `threshold`, strongest first.
pub fn local_maxima(spectrum: &Spectrum2D, threshold: f64) -> Vec<Maximum> {
    let rows = spectrum.nu_tau.count;
    let cols = spectrum.nu_t.count;
    let mut out = Vec::new();
    for j in 0..rows {
        for k in 0..cols {
            let v = spectrum.get(j, k);
            if !(v > threshold) {
                continue;
            }
            let mut is_max = true;
            'scan: for dj in -1i64..=1 {
                for dk in -1i64..=1 {
                    if dj == 0 && dk == 0 {
                        continue;
                    }
                    let (jj, kk) = (j as i64 + dj, k as i64 + dk);
                    if jj < 0 || kk < 0 || jj >= rows as i64 || kk >= cols as i64 {
                        continue;
                    }
                    let n = spectrum.get(jj as usize, kk as usize);
                    let earlier = (jj, kk) < (j as i64, k as i64);
                    if n > v || (earlier && n == v) {
                        is_max = false;
                        break 'scan;
                    }
                }
            }
            if is_max {
                out.push(Maximum {
                    nu_t: spectrum.nu_t.value(k),
                    nu_tau: spectrum.nu_tau.value(j),
                    amplitude: v,
                    index: (j, k),
                });
            }
        }
    }
    out.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
    out
}

/// Straight line through the spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CutLine {
    /// `ν_τ = c`, parametrized by `ν_t`.
    NuTau(f64),
    /// `ν_t = c`, parametrized by `ν_τ`.
    NuT(f64),
    /// `ν_τ = ν_t`, parametrized by `ν_t`.
    Diagonal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cut {
    pub line: CutLine,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
}

impl Cut {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("nu_THz,amplitude\n");
        for (x, v) in self.x.iter().zip(&self.values) {
            out.push_str(&format!("{},{}\n", fmt_sig9(*x), fmt_sig9(*v)));
        }
        out
    }

    /// Position and value of the largest sample.
    pub fn argmax(&self) -> Option<(f64, f64)> {
        self.x
            .iter()
            .zip(&self.values)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(x, v)| (*x, *v))
    }
}

fn bilinear(spectrum: &Spectrum2D, nu_t: f64, nu_tau: f64) -> f64 {
    let clamp = |p: f64, n: usize| -> (usize, f64) {
        let p = p.clamp(0.0, (n - 1) as f64);
        let i = (p.floor() as usize).min(n.saturating_sub(2));
        (i, if n > 1 { p - i as f64 } else { 0.0 })
    };
    let (k, fk) = clamp(spectrum.nu_t.position(nu_t), spectrum.nu_t.count);
    let (j, fj) = clamp(spectrum.nu_tau.position(nu_tau), spectrum.nu_tau.count);
    let at = |j: usize, k: usize| {
        spectrum.get(
            j.min(spectrum.nu_tau.count - 1),
            k.min(spectrum.nu_t.count - 1),
        )
    };
    let top = at(j, k) * (1.0 - fk) + at(j, k + 1) * fk;
    let bottom = at(j + 1, k) * (1.0 - fk) + at(j + 1, k + 1) * fk;
    top * (1.0 - fj) + bottom * fj
}

pub fn cut(spectrum: &Spectrum2D, line: CutLine) -> Result<Cut> {
    let outside = |what: String| Error::Analysis(format!("cut {what} lies outside the spectrum"));
    let (x, values): (Vec<f64>, Vec<f64>) = match line {
        CutLine::NuTau(c) => {
            if !spectrum.nu_tau.contains(c) {
                return Err(outside(format!("nu_tau = {c}")));
            }
            spectrum
                .nu_t
                .values()
                .map(|x| (x, bilinear(spectrum, x, c)))
                .unzip()
        }
        CutLine::NuT(c) => {
            if !spectrum.nu_t.contains(c) {
                return Err(outside(format!("nu_t = {c}")));
            }
            spectrum
                .nu_tau
                .values()
                .map(|y| (y, bilinear(spectrum, c, y)))
                .unzip()
        }
        CutLine::Diagonal => spectrum
            .nu_t
            .values()
            .filter(|&x| spectrum.nu_tau.contains(x))
            .map(|x| (x, bilinear(spectrum, x, x)))
            .unzip(),
    };
    if x.is_empty() {
        return Err(outside("nu_tau = nu_t".into()));
    }
    Ok(Cut { line, x, values })
}
