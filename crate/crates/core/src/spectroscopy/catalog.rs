//! Combinatorial catalog of nonlinear signals.
//!
//! Field A carries the pseudo-wave vector `(ν_j, 0)` and field B, delayed by
//! `τ`, carries `(ν_j, ν_j)`. A Liouville path of order `n` is an ordered
//! sequence of `n` interactions, each absorbing (+) or emitting (−) one
//! quantum of polariton `j` from one field; it radiates at the signed sum of
//! the vectors. Only paths involving every listed field survive the
//! `E_AB − E_A − E_B` subtraction.

use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::units::fmt_sig9;

use super::fourier::{local_maxima, Maximum};
use super::matrix::Spectrum2D;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    A,
    B,
}

/// One field interaction: polariton `mode` (0-based), absorbed when
/// `sign > 0`, emitted when `sign < 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interaction {
    pub field: Field,
    pub mode: usize,
    pub sign: i8,
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.sign > 0 { '+' } else { '-' };
        write!(f, "{s}{:?}{}", self.field, self.mode + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PeakKind {
    /// The contributions of one field cancel: phase-insensitive.
    PumpProbe,
    WaveMixing,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixingPeak {
    /// Number of field interactions.
    pub order: usize,
    pub nu_t: f64,
    pub nu_tau: f64,
    pub kind: PeakKind,
    /// Number of ordered paths reaching this location with this kind.
    pub degeneracy: u64,
    /// `ν_t` coincides with one of the polariton frequencies.
    pub resonant: bool,
    /// Distinct interaction multisets, each sorted.
    pub compositions: Vec<Vec<Interaction>>,
}

impl MixingPeak {
    /// "PP" or "(order+1)WM".
    pub fn label(&self) -> String {
        match self.kind {
            PeakKind::PumpProbe => "PP".to_string(),
            PeakKind::WaveMixing => format!("{}WM", self.order + 1),
        }
    }

    pub fn composition_text(&self) -> String {
        self.compositions
            .iter()
            .map(|c| c.iter().map(|i| i.to_string()).join(" "))
            .join(" | ")
    }
}

/// Tolerance (THz) for the resonance flag and location grouping.
const FREQ_TOL: f64 = 1e-6;

fn key(x: f64) -> i64 {
    (x / FREQ_TOL).round() as i64
}

fn multinomial(counts: impl Iterator<Item = usize>, n: usize) -> u64 {
    let fact = |k: usize| (1..=k as u64).product::<u64>();
    counts.fold(fact(n), |acc, c| acc / fact(c))
}

/// Location and kind of a path, or `None` when it does not survive.
pub(crate) fn path_signature(
    path: &[Interaction],
    freqs: &[f64],
    fields: &[Field],
) -> Option<(f64, f64, PeakKind)> {
    if !fields.iter().all(|f| path.iter().any(|i| i.field == *f)) {
        return None;
    }
    let mut nu_t = 0.0;
    let mut nu_tau = 0.0;
    let mut net = [0i32; 2];
    for i in path {
        let v = i.sign as f64 * freqs[i.mode];
        nu_t += v;
        if i.field == Field::B {
            nu_tau += v;
        }
        net[i.field as usize] += i.sign as i32;
    }
    if nu_t <= FREQ_TOL {
        return None;
    }
    let pp = fields.iter().any(|f| net[*f as usize] == 0);
    let kind = if pp {
        PeakKind::PumpProbe
    } else {
        PeakKind::WaveMixing
    };
    Some((nu_t, nu_tau, kind))
}

/// All signal locations of order `order` built from the polariton
/// frequencies `freqs` (THz) and the listed fields.
pub fn enumerate_mixing_peaks(
    freqs: &[f64],
    order: usize,
    fields: &[Field],
) -> Result<Vec<MixingPeak>> {
    if order < 3 || order % 2 == 0 || order > 7 {
        return Err(Error::invalid("order", "must be 3, 5 or 7"));
    }
    if freqs.is_empty() || freqs.iter().any(|f| !(*f > 0.0)) {
        return Err(Error::invalid("freqs", "must be positive"));
    }
    if freqs
        .iter()
        .tuple_combinations()
        .any(|(a, b)| (a - b).abs() <= FREQ_TOL)
    {
        return Err(Error::invalid("freqs", "must be distinct"));
    }
    let fields: Vec<Field> = fields.iter().copied().unique().collect();
    if fields.is_empty() {
        return Err(Error::invalid("fields", "at least one field is required"));
    }

    let alphabet: Vec<Interaction> = fields
        .iter()
        .flat_map(|&field| {
            (0..freqs.len())
                .flat_map(move |mode| [1i8, -1].map(|sign| Interaction { field, mode, sign }))
        })
        .collect();

    let mut groups: BTreeMap<(i64, i64, PeakKind), MixingPeak> = BTreeMap::new();
    for combo in alphabet.iter().copied().combinations_with_replacement(order) {
        let Some((nu_t, nu_tau, kind)) = path_signature(&combo, freqs, &fields) else {
            continue;
        };
        let paths = multinomial(combo.iter().counts().into_values(), order);
        let entry = groups
            .entry((key(nu_t), key(nu_tau), kind))
            .or_insert_with(|| MixingPeak {
                order,
                nu_t,
                nu_tau,
                kind,
                degeneracy: 0,
                resonant: freqs.iter().any(|f| (f - nu_t).abs() <= FREQ_TOL),
                compositions: Vec::new(),
            });
        entry.degeneracy += paths;
        let mut sorted = combo;
        sorted.sort();
        entry.compositions.push(sorted);
    }
    Ok(groups.into_values().collect())
}

/// Catalog export: `nu_t,nu_tau,order,type,degeneracy,resonant,composition`.
pub fn catalog_csv(peaks: &[MixingPeak]) -> String {
    let mut out = String::from("nu_t,nu_tau,order,type,degeneracy,resonant,composition\n");
    for p in peaks {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_sig9(p.nu_t),
            fmt_sig9(p.nu_tau),
            p.order,
            p.label(),
            p.degeneracy,
            p.resonant,
            p.composition_text()
        ));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeakMatch {
    pub maximum: Maximum,
    pub peak: MixingPeak,
    /// `(ν_t, ν_τ)` of the maximum minus the catalog location (THz).
    pub offset: (f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub matches: Vec<PeakMatch>,
    pub unmatched: Vec<Maximum>,
}

/// Matches local maxima above `threshold` to the nearest catalog entry
/// within `tolerance` (THz along `(ν_t, ν_τ)`; defaults to one bin of the
/// unpadded transform).
pub fn classify_peaks(
    spectrum: &Spectrum2D,
    catalog: &[MixingPeak],
    threshold: f64,
    tolerance: Option<(f64, f64)>,
) -> Result<Classification> {
    if catalog.is_empty() {
        return Err(Error::Analysis("empty mixing-peak catalog".into()));
    }
    let (tol_t, tol_tau) = tolerance.unwrap_or(spectrum.resolution);
    let mut matches = Vec::new();
    let mut unmatched = Vec::new();
    for m in local_maxima(spectrum, threshold) {
        let best = catalog
            .iter()
            .map(|p| (p, m.nu_t - p.nu_t, m.nu_tau - p.nu_tau))
            .filter(|(_, dt, dtau)| dt.abs() <= tol_t && dtau.abs() <= tol_tau)
            .min_by(|a, b| {
                let d = |x: &(&MixingPeak, f64, f64)| (x.1 / tol_t).powi(2) + (x.2 / tol_tau).powi(2);
                d(a).total_cmp(&d(b))
            });
        match best {
            Some((p, dt, dtau)) => matches.push(PeakMatch {
                maximum: m,
                peak: p.clone(),
                offset: (dt, dtau),
            }),
            None => unmatched.push(m),
        }
    }
    Ok(Classification { matches, unmatched })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(peaks: &[MixingPeak], nu_t: f64, nu_tau: f64) -> Vec<&MixingPeak> {
        peaks
            .iter()
            .filter(|p| (p.nu_t - nu_t).abs() < 1e-9 && (p.nu_tau - nu_tau).abs() < 1e-9)
            .collect()
    }

    #[test]
    fn single_mode_third_order() {
        let nu = 0.8;
        let peaks = enumerate_mixing_peaks(&[nu], 3, &[Field::A, Field::B]).unwrap();
        let resonant: Vec<_> = peaks.iter().filter(|p| p.resonant).collect();
        let mut locs: Vec<(f64, PeakKind)> = resonant.iter().map(|p| (p.nu_tau / nu, p.kind)).collect();
        locs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(
            locs,
            vec![
                (-1.0, PeakKind::WaveMixing),
                (0.0, PeakKind::PumpProbe),
                (1.0, PeakKind::PumpProbe),
                (2.0, PeakKind::WaveMixing),
            ]
        );
        // (ν, 0): orderings of {+A, +B, −B}.
        assert_eq!(at(&peaks, nu, 0.0)[0].degeneracy, 6);
        // (ν, −ν) = 2k_A − k_B: orderings of {+A, +A, −B}.
        assert_eq!(at(&peaks, nu, -nu)[0].degeneracy, 3);
        assert!(peaks.iter().all(|p| p.nu_t > 0.0 && p.degeneracy >= 1));
        assert!(peaks.iter().any(|p| (p.nu_t - 3.0 * nu).abs() < 1e-9 && !p.resonant));
        assert_eq!(at(&peaks, nu, 0.0)[0].label(), "PP");
        assert_eq!(at(&peaks, nu, 2.0 * nu)[0].label(), "4WM");
    }

    #[test]
    fn three_modes_include_cross_peaks() {
        let f = [0.44, 1.5, 1.69];
        let peaks = enumerate_mixing_peaks(&f, 3, &[Field::A, Field::B]).unwrap();
        assert!(!at(&peaks, f[0], -f[2]).is_empty());
        for nu in f {
            for k in [-1.0, 0.0, 1.0, 2.0] {
                assert!(!at(&peaks, nu, k * nu).is_empty(), "({nu}, {})", k * nu);
            }
        }
    }

    #[test]
    fn relabeling_modes_permutes_the_catalog() {
        let f = [0.44, 1.5, 1.69];
        let g = [1.69, 0.44, 1.5];
        let a = enumerate_mixing_peaks(&f, 3, &[Field::A, Field::B]).unwrap();
        let b = enumerate_mixing_peaks(&g, 3, &[Field::A, Field::B]).unwrap();
        let summary = |p: &[MixingPeak]| {
            let mut v: Vec<_> = p
                .iter()
                .map(|x| (key(x.nu_t), key(x.nu_tau), x.kind, x.degeneracy, x.resonant))
                .collect();
            v.sort();
            v
        };
        assert_eq!(summary(&a), summary(&b));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(enumerate_mixing_peaks(&[1.0], 4, &[Field::A, Field::B]).is_err());
        assert!(enumerate_mixing_peaks(&[1.0], 9, &[Field::A, Field::B]).is_err());
        assert!(enumerate_mixing_peaks(&[1.0, 1.0], 3, &[Field::A, Field::B]).is_err());
        assert!(enumerate_mixing_peaks(&[-1.0], 3, &[Field::A, Field::B]).is_err());
    }

    #[test]
    fn csv_layout() {
        let peaks = enumerate_mixing_peaks(&[1.0], 3, &[Field::A, Field::B]).unwrap();
        let csv = catalog_csv(&peaks);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "nu_t,nu_tau,order,type,degeneracy,resonant,composition"
        );
        assert!(csv.contains("1,0,3,PP,6,true,"));
    }
}
