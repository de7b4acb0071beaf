//! Uniform 2D grids and their text-matrix representation.
//!
//! ```text
//! # axis1: tau ps -1 0.05 121
//! # axis2: t ps -2 0.02 501
//! <121 rows of 501 whitespace-separated values>
//! ```
//!
//! `axis1` indexes rows, `axis2` columns. Values carry 9 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::units::fmt_sig9;

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub name: String,
    pub unit: String,
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(name: &str, unit: &str, start: f64, step: f64, count: usize) -> Result<Self> {
        if !(step > 0.0) || !start.is_finite() {
            return Err(Error::invalid(name, "axis step must be > 0 and start finite"));
        }
        if count == 0 {
            return Err(Error::invalid(name, "axis must have at least one point"));
        }
        Ok(Self {
            name: name.to_string(),
            unit: unit.to_string(),
            start,
            step,
            count,
        })
    }

    pub fn value(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|k| self.value(k))
    }

    pub fn end(&self) -> f64 {
        self.value(self.count - 1)
    }

    /// Fractional index of `x`.
    pub fn position(&self, x: f64) -> f64 {
        (x - self.start) / self.step
    }

    pub fn contains(&self, x: f64) -> bool {
        let p = self.position(x);
        p >= -1e-9 && p <= (self.count - 1) as f64 + 1e-9
    }

    pub fn nearest(&self, x: f64) -> usize {
        (self.position(x).round().max(0.0) as usize).min(self.count - 1)
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.count == other.count
            && (self.start - other.start).abs() <= 1e-9 * self.step
            && (self.step - other.step).abs() <= 1e-12 * self.step
    }

    fn header(&self, k: usize) -> String {
        format!(
            "# axis{k}: {} {} {} {} {}\n",
            self.name,
            self.unit,
            fmt_sig9(self.start),
            fmt_sig9(self.step),
            self.count
        )
    }
}

/// Nonlinear response `E_nl(t, τ)`: one row per delay.
#[derive(Clone, Debug, PartialEq)]
pub struct Scan2D {
    pub tau: Axis,
    pub t: Axis,
    /// Row-major, `tau.count × t.count` (kV/cm).
    pub values: Vec<f64>,
}

impl Scan2D {
    pub fn new(tau: Axis, t: Axis, values: Vec<f64>) -> Result<Self> {
        if values.len() != tau.count * t.count {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                tau.count,
                t.count
            )));
        }
        Ok(Self { tau, t, values })
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.t.count..(j + 1) * self.t.count]
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.t.count + k]
    }

    pub fn peak_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.tau.same_grid(&other.tau) && self.t.same_grid(&other.t)
    }

    pub fn to_text(&self) -> String {
        matrix_text(&self.tau, &self.t, &self.values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let (rows, cols, values) = parse_matrix(text, origin)?;
        Self::new(rows, cols, values)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

/// 2D amplitude spectrum `A_nl(ν_t, ν_τ)`: one row per `ν_τ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum2D {
    /// Signed, ascending (THz).
    pub nu_tau: Axis,
    /// Non-negative half plane (THz).
    pub nu_t: Axis,
    /// `|complex|`, normalized to a unit maximum.
    pub amplitude: Vec<f64>,
    /// Normalized complex transform, when kept.
    pub complex: Option<Vec<Complex64>>,
    /// Peak magnitude of the raw transform that was divided out.
    pub normalization: f64,
    /// Natural resolution of the unpadded transform (THz) along `(ν_t, ν_τ)`.
    pub resolution: (f64, f64),
}

impl Spectrum2D {
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.amplitude[j * self.nu_t.count + k]
    }

    pub fn to_text(&self) -> String {
        matrix_text(&self.nu_tau, &self.nu_t, &self.amplitude)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Reads an amplitude matrix. The complex part is not stored on disk; the
    /// resolution defaults to the grid step.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let (nu_tau, nu_t, amplitude) = parse_matrix(text, origin)?;
        let normalization = amplitude.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let resolution = (nu_t.step, nu_tau.step);
        Ok(Self {
            nu_tau,
            nu_t,
            amplitude,
            complex: None,
            normalization,
            resolution,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

pub(crate) fn matrix_text(rows: &Axis, cols: &Axis, values: &[f64]) -> String {
    let mut out = rows.header(1);
    out.push_str(&cols.header(2));
    for row in values.chunks(cols.count) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{}", fmt_sig9(*v));
        }
        out.push('\n');
    }
    out
}

fn parse_axis(line: &str, k: usize, origin: &Path, lineno: usize) -> Result<Axis> {
    let err = |reason: String| Error::Parse {
        path: origin.to_path_buf(),
        line: lineno,
        reason,
    };
    let prefix = format!("# axis{k}:");
    let rest = line
        .strip_prefix(&prefix)
        .ok_or_else(|| err(format!("expected `{prefix}` header")))?;
    let fields: Vec<&str> = rest.split_whitespace().collect();
    if fields.len() != 5 {
        return Err(err("axis header needs: name unit start step count".into()));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number `{s}`")));
    let count = fields[4]
        .parse::<usize>()
        .map_err(|_| err(format!("bad count `{}`", fields[4])))?;
    Axis::new(fields[0], fields[1], num(fields[2])?, num(fields[3])?, count)
        .map_err(|e| err(e.to_string()))
}

fn parse_matrix(text: &str, origin: &Path) -> Result<(Axis, Axis, Vec<f64>)> {
    let mut lines = text.lines().enumerate();
    let mut next_header = |k: usize| -> Result<Axis> {
        let (i, line) = lines.next().ok_or_else(|| Error::Parse {
            path: origin.to_path_buf(),
            line: k,
            reason: "missing axis header".into(),
        })?;
        parse_axis(line.trim(), k, origin, i + 1)
    };
    let rows = next_header(1)?;
    let cols = next_header(2)?;
    let mut values = Vec::with_capacity(rows.count * cols.count);
    let mut n_rows = 0;
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let before = values.len();
        for tok in line.split_whitespace() {
            values.push(tok.parse::<f64>().map_err(|_| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                reason: format!("bad number `{tok}`"),
            })?);
        }
        if values.len() - before != cols.count {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                reason: format!("expected {} columns, found {}", cols.count, values.len() - before),
            });
        }
        n_rows += 1;
    }
    if n_rows != rows.count {
        return Err(Error::Parse {
            path: origin.to_path_buf(),
            line: 0,
            reason: format!("expected {} rows, found {n_rows}", rows.count),
        });
    }
    Ok((rows, cols, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scan() -> Scan2D {
        let tau = Axis::new("tau", "ps", -1.0, 0.5, 3).unwrap();
        let t = Axis::new("t", "ps", 0.0, 0.1, 4).unwrap();
        let values = (0..12).map(|k| (k as f64 * 0.37).sin() * 1e-3).collect();
        Scan2D::new(tau, t, values).unwrap()
    }

    #[test]
    fn text_round_trip() {
        let s = scan();
        let text = s.to_text();
        assert!(text.starts_with("# axis1: tau ps -1 0.5 3\n# axis2: t ps 0 0.1 4\n"));
        let back = Scan2D::parse(&text, Path::new("mem")).unwrap();
        assert!(back.same_grid(&s));
        for (a, b) in back.values.iter().zip(&s.values) {
            assert!((a - b).abs() <= 1e-8 * b.abs() + 1e-300);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let s = scan();
        assert!(Scan2D::new(s.tau.clone(), s.t.clone(), vec![0.0; 11]).is_err());
        let mut text = s.to_text();
        text.push_str("1 2 3 4\n");
        assert!(Scan2D::parse(&text, Path::new("mem")).is_err());
        let short = "# axis1: tau ps 0 1 1\n# axis2: t ps 0 1 2\n1\n";
        assert!(Scan2D::parse(short, Path::new("mem")).is_err());
        assert!(Scan2D::parse("# axis1: tau ps 0 0 1\n", Path::new("mem")).is_err());
    }
}
