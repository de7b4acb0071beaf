//! Density-matrix dynamics of the Landau fan coupled to two cavity modes.
//!
//! The electronic state is the one-body density matrix `ρ` over `N` Landau
//! levels. Levels couple only to their neighbours through the cavity fields,
//! so the Hamiltonian is tridiagonal; `ρ` itself is dense. The solver works in
//! angular-frequency units (`H/ħ`, rad/ps) in the Schrödinger picture with the
//! constant `ω_{j_f}` removed from the diagonal.
//!
//! Three nonlinear mechanisms are built in: the non-parabolic level ladder,
//! and excitation-dependent renormalizations of level energies (`U_e`) and
//! dipoles (`U_d`). Coherences touching levels outside the LO-phonon window
//! dephase quickly.

use num_complex::Complex64;

use crate::bosonic::{BosonicParams, MAX_STEP};
use crate::error::{Error, Result};
use crate::pulses::Waveform;
use crate::rk4::{all_finite, ComplexOde, Rk4};
use crate::units::{
    cyclotron_angular, landau_dos_per_cm2, magnetic_length, mev_to_angular, thz_to_angular,
    ELEMENTARY_CHARGE,
};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Level energies of the ladder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelSpectrum {
    /// `ω_l = sqrt(ω_np²/4 + ω_np·(eB/m*)·(l + ½))`.
    NonParabolic,
    /// `ω_l = (eB/m*)·(l + ½)`.
    Parabolic,
    /// Equidistant, with the spacing of the non-parabolic transition at the
    /// Fermi level. Isolates the Coulomb terms while keeping the polaritons
    /// where the full model has them.
    FermiMatched,
}

/// How population changes are weighted in the excitation measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExcitationMeasure {
    /// `½ Σ Δn_m · l_m`, clamped at zero.
    Signed,
    /// `½ Σ |Δn_m| · |l_m|`.
    Absolute,
}

/// Reference dipole dividing the polarization and the level coupling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DipoleReference {
    /// `e·l₀·sqrt(filling)`: the harmonic ladder then reproduces the bosonic
    /// model exactly.
    Filling,
    /// `d_{j_f, j_f+1} = e·l₀·sqrt(j_f + 1)`.
    FermiTransition,
}

/// Coherences beyond this distance from the diagonal stay below 1e-14 of the
/// emitted field at the reference excitation density.
pub const DEFAULT_COHERENCE_BAND: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct LandauParams {
    pub n_levels: usize,
    /// Static magnetic field (T).
    pub b_field: f64,
    /// Effective mass in units of the electron mass.
    pub m_eff: f64,
    /// Non-parabolicity angular frequency (rad/ps).
    pub omega_np: f64,
    pub filling: f64,
    pub u_e: f64,
    pub u_d: f64,
    pub level_spectrum: LevelSpectrum,
    /// Baseline coherence time (ps).
    pub t2_base: f64,
    /// Coherence time for levels outside the phonon window (ps).
    pub t2_phonon: f64,
    /// Population relaxation time toward equilibrium (ps); infinite disables.
    pub t1: f64,
    /// LO-phonon energy (meV).
    pub e_lo: f64,
    pub phonon_window: bool,
    pub excitation_measure: ExcitationMeasure,
    pub dipole_reference: DipoleReference,
    /// Keep coherences `ρ_{m,m+k}` only for `k ≤ band`; `None` keeps all.
    pub coherence_band: Option<usize>,
    pub cavity: BosonicParams,
}

impl Default for LandauParams {
    fn default() -> Self {
        Self {
            n_levels: 100,
            b_field: 2.3,
            m_eff: 0.066,
            omega_np: thz_to_angular(237.0),
            filling: 15.73,
            u_e: 0.016,
            u_d: 0.064,
            level_spectrum: LevelSpectrum::NonParabolic,
            t2_base: 2.0,
            t2_phonon: 0.1,
            t1: 10.0,
            e_lo: 36.1,
            phonon_window: true,
            excitation_measure: ExcitationMeasure::Signed,
            dipole_reference: DipoleReference::Filling,
            coherence_band: Some(DEFAULT_COHERENCE_BAND),
            cavity: BosonicParams::default(),
        }
    }
}

impl LandauParams {
    /// Harmonic ladder without Coulomb terms or phonon window: the linear
    /// reference case.
    pub fn harmonic() -> Self {
        Self {
            level_spectrum: LevelSpectrum::Parabolic,
            u_e: 0.0,
            u_d: 0.0,
            phonon_window: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_levels < 2 {
            return Err(Error::invalid("n_levels", "must be >= 2"));
        }
        if !(self.b_field > 0.0) {
            return Err(Error::invalid("b_field", "must be > 0"));
        }
        if !(self.m_eff > 0.0) {
            return Err(Error::invalid("m_eff", "must be > 0"));
        }
        if !(self.filling >= 0.0 && self.filling <= self.n_levels as f64) {
            return Err(Error::invalid("filling", "must lie in [0, n_levels]"));
        }
        if !(self.u_e >= 0.0) || !(self.u_d >= 0.0) {
            return Err(Error::invalid("u_e/u_d", "must be >= 0"));
        }
        if self.level_spectrum == LevelSpectrum::NonParabolic && !(self.omega_np > 0.0) {
            return Err(Error::invalid("omega_np", "must be > 0"));
        }
        if !(self.t2_base > 0.0) || !(self.t2_phonon > 0.0) || !(self.t1 > 0.0) {
            return Err(Error::invalid("t2_base/t2_phonon/t1", "must be > 0"));
        }
        if self.coherence_band == Some(0) {
            return Err(Error::invalid("coherence_band", "must be >= 1"));
        }
        self.cavity.validate()
    }

    /// Index of the partially filled level at the Fermi energy.
    pub fn fermi_index(&self) -> usize {
        (self.filling.floor() as usize).min(self.n_levels - 1)
    }

    /// Equilibrium transition frequency at the Fermi level (rad/ps).
    pub fn fermi_transition(&self) -> f64 {
        let w = landau_frequencies(self);
        let jf = self.fermi_index().min(self.n_levels - 2);
        w[jf + 1] - w[jf]
    }

    /// The cavity parameters with the matter frequency set to the ladder's
    /// Fermi-level transition, which fixes the diamagnetic terms.
    pub fn effective_cavity(&self) -> BosonicParams {
        BosonicParams {
            omega_c: self.fermi_transition(),
            ..self.cavity
        }
    }

    /// Excitation density per unit area (cm⁻²) for a given `ρ_exc`.
    pub fn excitation_density(&self, rho_exc: f64) -> f64 {
        rho_exc * landau_dos_per_cm2(self.b_field)
    }
}

/// Level angular frequencies `ω_l` (rad/ps), `l = 0..N`.
pub fn landau_frequencies(params: &LandauParams) -> Vec<f64> {
    let wc = cyclotron_angular(params.b_field, params.m_eff);
    let n = params.n_levels;
    match params.level_spectrum {
        LevelSpectrum::NonParabolic => {
            let wnp = params.omega_np;
            (0..n)
                .map(|l| (wnp * wnp / 4.0 + wnp * wc * (l as f64 + 0.5)).sqrt())
                .collect()
        }
        LevelSpectrum::Parabolic => (0..n).map(|l| wc * (l as f64 + 0.5)).collect(),
        LevelSpectrum::FermiMatched => {
            let np = LandauParams {
                level_spectrum: LevelSpectrum::NonParabolic,
                n_levels: n.max(params.fermi_index() + 2),
                ..params.clone()
            };
            let spacing = np.fermi_transition();
            (0..n).map(|l| spacing * (l as f64 + 0.5)).collect()
        }
    }
}

/// Adjacent-level dipoles `d_{m,m+1} = e·l₀·sqrt(m+1)` (C·m), `m = 0..N−1`.
/// All other dipoles vanish.
pub fn dipole_moments(params: &LandauParams) -> Vec<f64> {
    let el0 = ELEMENTARY_CHARGE * magnetic_length(params.b_field);
    (0..params.n_levels - 1)
        .map(|m| el0 * ((m + 1) as f64).sqrt())
        .collect()
}

fn dipole_reference(params: &LandauParams) -> f64 {
    let el0 = ELEMENTARY_CHARGE * magnetic_length(params.b_field);
    match params.dipole_reference {
        DipoleReference::Filling if params.filling > 0.0 => el0 * params.filling.sqrt(),
        _ => el0 * ((params.fermi_index() + 1) as f64).sqrt(),
    }
}

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![ZERO; n * n],
        }
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.data[m * self.n + n]
    }

    #[inline]
    pub fn set(&mut self, m: usize, n: usize, v: Complex64) {
        self.data[m * self.n + n] = v;
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|m| self.get(m, m)).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.get(m, m).re).collect()
    }

    /// `max |ρ − ρ†|`.
    pub fn hermiticity_drift(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..self.n {
            for k in m..self.n {
                worst = worst.max((self.get(m, k) - self.get(k, m).conj()).norm());
            }
        }
        worst
    }

    pub fn commutator(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = ZERO;
                for k in 0..n {
                    acc += self.get(i, k) * other.get(k, j) - other.get(i, k) * self.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }
}

/// Sharp Fermi distribution: full levels below the Fermi index, the
/// fractional remainder at it, empty above.
pub fn equilibrium_rho(params: &LandauParams) -> DensityMatrix {
    let n = params.n_levels;
    let mut rho = DensityMatrix::zeros(n);
    for (m, p) in equilibrium_populations(params).into_iter().enumerate() {
        rho.set(m, m, p.into());
    }
    rho
}

fn equilibrium_populations(params: &LandauParams) -> Vec<f64> {
    let n = params.n_levels;
    let full = params.filling.floor() as usize;
    let frac = params.filling - full as f64;
    (0..n)
        .map(|m| {
            if m < full {
                1.0
            } else if m == full {
                frac
            } else {
                0.0
            }
        })
        .collect()
}

fn ladder_distance(m: usize, jf: usize) -> f64 {
    use std::cmp::Ordering::*;
    match m.cmp(&jf) {
        Less => m as f64 - jf as f64,
        Greater => m as f64 - jf as f64 + 1.0,
        Equal => 0.0,
    }
}

fn excitation_from_diagonals(
    diag: impl Iterator<Item = f64>,
    diag0: &[f64],
    jf: usize,
    measure: ExcitationMeasure,
) -> f64 {
    let mut acc = 0.0;
    for (m, (n, n0)) in diag.zip(diag0).enumerate() {
        let dn = n - n0;
        let l = ladder_distance(m, jf);
        acc += match measure {
            ExcitationMeasure::Signed => dn * l,
            ExcitationMeasure::Absolute => dn.abs() * l.abs(),
        };
    }
    (0.5 * acc).max(0.0)
}

/// Excitation measure `ρ_exc` of `rho` relative to `rho0`.
pub fn rho_exc(
    rho: &DensityMatrix,
    rho0: &DensityMatrix,
    fermi_index: usize,
    measure: ExcitationMeasure,
) -> Result<f64> {
    if rho.n != rho0.n {
        return Err(Error::GridMismatch(format!(
            "density matrices of size {} and {}",
            rho.n, rho0.n
        )));
    }
    Ok(excitation_from_diagonals(
        rho.diagonal().into_iter(),
        &rho0.diagonal(),
        fermi_index,
        measure,
    ))
}

/// Scalar factors `(1 + U ρ_exc)⁻¹` applied to level energies and dipoles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Renormalization {
    pub energy: f64,
    pub dipole: f64,
}

impl Renormalization {
    pub fn at(params: &LandauParams, rho_exc: f64) -> Self {
        Self {
            energy: 1.0 / (1.0 + params.u_e * rho_exc),
            dipole: 1.0 / (1.0 + params.u_d * rho_exc),
        }
    }
}

/// Full Hamiltonian `H/ħ` (rad/ps) for the given state, as a dense matrix.
///
/// Diagonal: `ω_l` scaled by the energy renormalization. First off-diagonals:
/// `(d_{m,m+1}/d_ref) · f_d · Σ_j Ω_j (α_j + α_j*)`, real.
pub fn build_hamiltonian(
    rho: &DensityMatrix,
    alpha: [Complex64; 2],
    params: &LandauParams,
) -> Result<DensityMatrix> {
    let rho0 = equilibrium_rho(params);
    let exc = rho_exc(rho, &rho0, params.fermi_index(), params.excitation_measure)?;
    let ren = Renormalization::at(params, exc);
    let w = landau_frequencies(params);
    let d = dipole_moments(params);
    let d_ref = dipole_reference(params);
    let drive = cavity_drive(&params.cavity, alpha);
    let n = params.n_levels;
    let mut h = DensityMatrix::zeros(n);
    for m in 0..n {
        h.set(m, m, (w[m] * ren.energy).into());
    }
    for m in 0..n - 1 {
        let v: Complex64 = (d[m] / d_ref * ren.dipole * drive).into();
        h.set(m, m + 1, v);
        h.set(m + 1, m, v);
    }
    Ok(h)
}

/// `Σ_j Ω_j (α_j + α_j*)` (rad/ps).
fn cavity_drive(cavity: &BosonicParams, alpha: [Complex64; 2]) -> f64 {
    cavity
        .modes()
        .iter()
        .zip(alpha)
        .map(|(m, a)| m.omega_rabi_vac * 2.0 * a.re)
        .sum()
}

/// Dense state: density matrix, cavity amplitudes and time.
#[derive(Clone, Debug, PartialEq)]
pub struct LandauState {
    pub rho: DensityMatrix,
    pub alpha: [Complex64; 2],
    /// ps
    pub time: f64,
}

impl LandauState {
    pub fn equilibrium(params: &LandauParams, time: f64) -> Self {
        Self {
            rho: equilibrium_rho(params),
            alpha: [ZERO; 2],
            time,
        }
    }
}

/// Precomputed coefficients and storage layout of the solver.
///
/// The state vector holds the upper band of `ρ` diagonal by diagonal
/// (`band[k][m] = ρ_{m, m+k}`), followed by the two cavity amplitudes. The
/// lower triangle is implied by Hermiticity, which therefore holds exactly.
#[derive(Clone, Debug)]
pub struct LandauSolver {
    params: LandauParams,
    cavity: BosonicParams,
    n: usize,
    band: usize,
    offsets: Vec<usize>,
    /// `ω_l − ω_{j_f}`
    level_offsets: Vec<f64>,
    /// `d_{m,m+1}/d_ref`
    dipoles: Vec<f64>,
    /// Damping rate per stored element, same layout as the band storage.
    rates: Vec<f64>,
    diag0: Vec<f64>,
    jf: usize,
    /// Renormalization for the current step.
    ren: Renormalization,
    drive: Option<Waveform>,
    /// Renormalized diagonal `(ω_l − ω_{j_f})·f_e` for the current step.
    diag_energies: Vec<f64>,
    /// Scratch for the off-diagonal elements `H_{m,m+1}`.
    couplings: Vec<f64>,
}

impl LandauSolver {
    pub fn new(params: &LandauParams) -> Result<Self> {
        params.validate()?;
        let n = params.n_levels;
        let band = params.coherence_band.unwrap_or(n - 1).min(n - 1);
        let mut offsets = Vec::with_capacity(band + 1);
        let mut acc = 0;
        for k in 0..=band {
            offsets.push(acc);
            acc += n - k;
        }
        let w = landau_frequencies(params);
        let jf = params.fermi_index();
        let level_offsets: Vec<f64> = w.iter().map(|x| x - w[jf]).collect();
        let d_ref = dipole_reference(params);
        let dipoles: Vec<f64> = dipole_moments(params).iter().map(|d| d / d_ref).collect();

        let half_lo = 0.5 * mev_to_angular(params.e_lo);
        let outside: Vec<bool> = level_offsets
            .iter()
            .map(|x| params.phonon_window && x.abs() > half_lo)
            .collect();
        let mut rates = vec![0.0; acc];
        for k in 0..=band {
            for m in 0..n - k {
                let idx = offsets[k] + m;
                rates[idx] = if k == 0 {
                    1.0 / params.t1
                } else if outside[m] || outside[m + k] {
                    1.0 / params.t2_phonon
                } else {
                    1.0 / params.t2_base
                };
            }
        }
        let level_offsets_copy = level_offsets.clone();
        Ok(Self {
            params: params.clone(),
            cavity: params.effective_cavity(),
            n,
            band,
            offsets,
            level_offsets,
            dipoles,
            rates,
            diag0: equilibrium_populations(params),
            jf,
            ren: Renormalization {
                energy: 1.0,
                dipole: 1.0,
            },
            drive: None,
            diag_energies: level_offsets_copy,
            couplings: vec![0.0; n - 1],
        })
    }

    pub fn params(&self) -> &LandauParams {
        &self.params
    }

    pub fn cavity(&self) -> &BosonicParams {
        &self.cavity
    }

    fn band_len(&self) -> usize {
        self.offsets[self.band] + self.n - self.band
    }

    pub fn dim(&self) -> usize {
        self.band_len() + 2
    }

    /// Levels outside the phonon window.
    pub fn outside_window(&self) -> Vec<usize> {
        let half_lo = 0.5 * mev_to_angular(self.params.e_lo);
        (0..self.n)
            .filter(|&l| self.params.phonon_window && self.level_offsets[l].abs() > half_lo)
            .collect()
    }

    pub fn pack(&self, state: &LandauState) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.dim()];
        for k in 0..=self.band {
            for m in 0..self.n - k {
                y[self.offsets[k] + m] = state.rho.get(m, m + k);
            }
        }
        for m in 0..self.n {
            y[m] = Complex64::new(y[m].re, 0.0);
        }
        let b = self.band_len();
        y[b] = state.alpha[0];
        y[b + 1] = state.alpha[1];
        y
    }

    pub fn unpack(&self, y: &[Complex64], time: f64) -> LandauState {
        let mut rho = DensityMatrix::zeros(self.n);
        for k in 0..=self.band {
            for m in 0..self.n - k {
                let v = y[self.offsets[k] + m];
                rho.set(m, m + k, v);
                if k > 0 {
                    rho.set(m + k, m, v.conj());
                }
            }
        }
        let b = self.band_len();
        LandauState {
            rho,
            alpha: [y[b], y[b + 1]],
            time,
        }
    }

    pub fn equilibrium_vector(&self) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.dim()];
        for (m, p) in self.diag0.iter().enumerate() {
            y[m] = Complex64::new(*p, 0.0);
        }
        y
    }

    pub fn rho_exc(&self, y: &[Complex64]) -> f64 {
        excitation_from_diagonals(
            y[..self.n].iter().map(|c| c.re),
            &self.diag0,
            self.jf,
            self.params.excitation_measure,
        )
    }

    /// Dimensionless polarization `Σ ρ_mn d_mn / d_ref` including the current
    /// dipole renormalization.
    pub fn polarization(&self, y: &[Complex64]) -> f64 {
        if self.band == 0 {
            return 0.0;
        }
        let b1 = &y[self.offsets[1]..self.offsets[1] + self.n - 1];
        2.0 * self.ren.dipole
            * b1.iter()
                .zip(&self.dipoles)
                .map(|(r, d)| r.re * d)
                .sum::<f64>()
    }

    pub fn alpha(&self, y: &[Complex64]) -> [Complex64; 2] {
        let b = self.band_len();
        [y[b], y[b + 1]]
    }

    pub fn trace(&self, y: &[Complex64]) -> f64 {
        y[..self.n].iter().map(|c| c.re).sum()
    }

    pub fn populations(&self, y: &[Complex64]) -> Vec<f64> {
        y[..self.n].iter().map(|c| c.re).collect()
    }

    /// Field radiated by the cavity (kV/cm) for state `y`.
    pub fn reradiated(&self, y: &[Complex64]) -> f64 {
        self.cavity.reradiated(self.alpha(y))
    }

    /// Sets the renormalization from `y` as the step-initial state.
    pub fn refresh_renormalization(&mut self, y: &[Complex64]) {
        self.ren = Renormalization::at(&self.params, self.rho_exc(y));
        let fe = self.ren.energy;
        for (h, w) in self.diag_energies.iter_mut().zip(&self.level_offsets) {
            *h = w * fe;
        }
    }

    pub fn renormalization(&self) -> Renormalization {
        self.ren
    }

    fn set_drive(&mut self, drive: &Waveform) {
        self.drive = Some(drive.clone());
    }

    fn field_at(&self, t: f64) -> f64 {
        self.drive.as_ref().map_or(0.0, |d| d.value_at(t))
    }

    fn rhs(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let mut o = std::mem::take(&mut self.couplings);
        let alpha = self.alpha(y);
        let drive = cavity_drive(&self.cavity, alpha) * self.ren.dipole;
        for (o, d) in o.iter_mut().zip(&self.dipoles) {
            *o = d * drive;
        }
        self.rhs_with(t, y, dy, &o);
        self.couplings = o;
    }

    fn rhs_with(&self, t: f64, y: &[Complex64], dy: &mut [Complex64], o: &[f64]) {
        let n = self.n;
        let band = self.band;
        let alpha = self.alpha(y);
        let h = &self.diag_energies;

        let get = |k: usize, m: usize| -> Complex64 {
            // ρ_{m, m+k} for k within the band, zero beyond.
            if k > band {
                ZERO
            } else {
                y[self.offsets[k] + m]
            }
        };

        // Populations: real by construction.
        for m in 0..n {
            let mut v = 0.0;
            if m >= 1 && band >= 1 {
                v += 2.0 * o[m - 1] * get(1, m - 1).im;
            }
            if m + 1 < n && band >= 1 {
                v -= 2.0 * o[m] * get(1, m).im;
            }
            let idx = m;
            v -= self.rates[idx] * (y[idx].re - self.diag0[m]);
            dy[idx] = Complex64::new(v, 0.0);
        }

        for k in 1..=band {
            let base = self.offsets[k];
            let len = n - k;
            for m in 0..len {
                let col = m + k;
                let r = y[base + m];
                // (Hρ)_{m,col}
                let mut hr = r * h[m];
                if m >= 1 {
                    hr += get(k + 1, m - 1) * o[m - 1];
                }
                let below = if k == 1 { y[m + 1] } else { get(k - 1, m + 1) };
                hr += below * o[m];
                // (ρH)_{m,col}
                let mut rh = r * h[col];
                let left = if k == 1 { y[m] } else { get(k - 1, m) };
                rh += left * o[col - 1];
                if col + 1 < n {
                    rh += get(k + 1, m) * o[col];
                }
                dy[base + m] = -I * (hr - rh) - r * self.rates[base + m];
            }
        }

        let pol = self.polarization(y);
        let field = self.field_at(t);
        let cav = self.cavity.cavity_rhs(alpha, pol, field);
        let b = self.band_len();
        dy[b] = cav[0];
        dy[b + 1] = cav[1];
    }
}

impl ComplexOde for LandauSolver {
    fn begin_step(&mut self, _t: f64, y: &[Complex64]) {
        self.refresh_renormalization(y);
    }

    fn derivative(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        self.rhs(t, y, dy);
    }
}

/// Advances a dense state by one RK4 step, `drive` supplying the incident
/// field around `state.time`.
pub fn step_landau(
    state: &LandauState,
    drive: &Waveform,
    params: &LandauParams,
    dt: f64,
) -> Result<LandauState> {
    if !(dt > 0.0 && dt <= MAX_STEP + 1e-15) {
        return Err(Error::invalid("dt", format!("must be in (0, {MAX_STEP}] ps")));
    }
    let drift = state.rho.hermiticity_drift();
    if drift > 1e-9 {
        return Err(Error::HermiticityDrift {
            drift,
            time: state.time,
        });
    }
    let mut solver = LandauSolver::new(params)?;
    solver.set_drive(drive);
    let mut y = solver.pack(state);
    Rk4::new(y.len()).step(&mut solver, state.time, dt, &mut y);
    if !all_finite(&y) {
        return Err(Error::Diverged {
            time: state.time + dt,
        });
    }
    Ok(solver.unpack(&y, state.time + dt))
}

/// What to keep from a run besides the scalar observables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RecordOptions {
    /// Record level populations every `stride` steps; `None` skips them.
    pub population_stride: Option<usize>,
}

impl Default for RecordOptions {
    fn default() -> Self {
        Self {
            population_stride: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExcitationTrace {
    pub t0: f64,
    pub dt: f64,
    pub rho_exc: Vec<f64>,
    /// `|α_j|²` per sample.
    pub cavity_populations: Vec<[f64; 2]>,
    /// Stride (in samples) of `populations`.
    pub population_stride: usize,
    /// `n_l(t)` at every `population_stride`-th sample.
    pub populations: Vec<Vec<f64>>,
}

impl ExcitationTrace {
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }
}

/// Worst-case invariant violations observed over a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InvariantReport {
    /// `max |ρ − ρ†|`.
    pub hermiticity: f64,
    /// `max |Tr ρ(t) − Tr ρ_0|` divided by the run length (1/ps).
    pub trace_drift_per_ps: f64,
    /// Largest population of the topmost level.
    pub top_population: f64,
    /// Largest `min(n_l)` deficit below zero and excess above one.
    pub population_excursion: f64,
    /// Largest population summed over levels outside the phonon window
    /// minus its equilibrium value.
    pub max_outside_window: f64,
    pub warnings: Vec<String>,
}

impl InvariantReport {
    /// Keeps the worse of each figure.
    pub fn absorb(&mut self, o: &InvariantReport) {
        self.hermiticity = self.hermiticity.max(o.hermiticity);
        self.trace_drift_per_ps = self.trace_drift_per_ps.max(o.trace_drift_per_ps);
        self.top_population = self.top_population.max(o.top_population);
        self.population_excursion = self.population_excursion.max(o.population_excursion);
        self.max_outside_window = self.max_outside_window.max(o.max_outside_window);
        for w in &o.warnings {
            if !self.warnings.contains(w) {
                self.warnings.push(w.clone());
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LandauRun {
    pub trace: ExcitationTrace,
    /// Transmitted field (kV/cm).
    pub emitted: Waveform,
    pub alpha: Vec<[Complex64; 2]>,
    /// Dimensionless polarization per sample.
    pub polarization: Vec<f64>,
    pub final_state: LandauState,
    pub invariants: InvariantReport,
}

/// Integrates from equilibrium over the full drive grid.
pub fn run_landau(params: &LandauParams, drive: &Waveform, record: RecordOptions) -> Result<LandauRun> {
    let mut solver = LandauSolver::new(params)?;
    let dt = drive.dt;
    if dt > MAX_STEP + 1e-15 {
        return Err(Error::invalid("drive.dt", format!("must be <= {MAX_STEP} ps")));
    }
    solver.set_drive(drive);
    let n_steps = drive.len();
    let mut rk = Rk4::new(solver.dim());
    let mut y = solver.equilibrium_vector();
    let trace0 = solver.trace(&y);
    let outside = solver.outside_window();
    let outside0: f64 = outside.iter().map(|&l| solver.diag0[l]).sum();

    let stride = record.population_stride.unwrap_or(0);
    let mut trace = ExcitationTrace {
        t0: drive.t0,
        dt,
        rho_exc: Vec::with_capacity(n_steps),
        cavity_populations: Vec::with_capacity(n_steps),
        population_stride: stride,
        populations: Vec::new(),
    };
    let mut emitted = Vec::with_capacity(n_steps);
    let mut alphas = Vec::with_capacity(n_steps);
    let mut pols = Vec::with_capacity(n_steps);
    let mut inv = InvariantReport::default();
    let n = params.n_levels;

    for k in 0..n_steps {
        let t = drive.time(k);
        if k > 0 {
            rk.step(&mut solver, drive.time(k - 1), dt, &mut y);
            if !all_finite(&y) {
                return Err(Error::Diverged { time: t });
            }
        }
        solver.refresh_renormalization(&y);
        let alpha = solver.alpha(&y);
        trace.rho_exc.push(solver.rho_exc(&y));
        trace
            .cavity_populations
            .push([alpha[0].norm_sqr(), alpha[1].norm_sqr()]);
        if stride > 0 && k % stride == 0 {
            trace.populations.push(solver.populations(&y));
        }
        emitted.push(drive.samples[k] - solver.reradiated(&y));
        alphas.push(alpha);
        pols.push(solver.polarization(&y));

        let mut herm = 0.0f64;
        let mut excursion = 0.0f64;
        for c in &y[..n] {
            herm = herm.max(c.im.abs());
            excursion = excursion.max(-c.re).max(c.re - 1.0);
        }
        inv.hermiticity = inv.hermiticity.max(herm);
        inv.population_excursion = inv.population_excursion.max(excursion);
        inv.top_population = inv.top_population.max(y[n - 1].re);
        let tr = (solver.trace(&y) - trace0).abs();
        inv.trace_drift_per_ps = inv.trace_drift_per_ps.max(tr);
        let out: f64 = outside.iter().map(|&l| y[l].re).sum::<f64>() - outside0;
        inv.max_outside_window = inv.max_outside_window.max(out.abs());
    }
    let span = (drive.len() - 1) as f64 * dt;
    if span > 0.0 {
        inv.trace_drift_per_ps /= span;
    }
    if inv.top_population >= 1e-6 {
        inv.warnings.push(format!(
            "top level population {:.3e} exceeds 1e-6: increase n_levels",
            inv.top_population
        ));
    }
    if inv.hermiticity > 1e-9 {
        return Err(Error::HermiticityDrift {
            drift: inv.hermiticity,
            time: drive.time(n_steps - 1),
        });
    }

    let final_state = solver.unpack(&y, drive.time(n_steps - 1));
    Ok(LandauRun {
        trace,
        emitted: Waveform {
            t0: drive.t0,
            dt,
            samples: emitted,
        },
        alpha: alphas,
        polarization: pols,
        final_state,
        invariants: inv,
    })
}

impl LandauRun {
    /// Observable dump: `t_ps,rho_exc,pop_lc,pop_dp,e_measured`.
    pub fn observables_csv(&self) -> String {
        use crate::units::fmt_sig9;
        let mut out = String::from("t_ps,rho_exc,pop_lc,pop_dp,e_measured\n");
        for k in 0..self.trace.rho_exc.len() {
            let p = self.trace.cavity_populations[k];
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_sig9(self.trace.time(k)),
                fmt_sig9(self.trace.rho_exc[k]),
                fmt_sig9(p[0]),
                fmt_sig9(p[1]),
                fmt_sig9(self.emitted.samples[k])
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::angular_to_thz;

    #[test]
    fn fermi_adjacent_transitions() {
        let p = LandauParams::default();
        let w = landau_frequencies(&p);
        let t = |l: usize| angular_to_thz(w[l + 1] - w[l]);
        assert!((t(15) / 0.868 - 1.0).abs() < 0.005, "{}", t(15));
        assert!((t(14) / 0.874 - 1.0).abs() < 0.005, "{}", t(14));
        assert!((t(16) / 0.862 - 1.0).abs() < 0.005, "{}", t(16));
    }

    #[test]
    fn parabolic_ladder_is_equidistant() {
        let p = LandauParams {
            level_spectrum: LevelSpectrum::Parabolic,
            ..LandauParams::default()
        };
        let w = landau_frequencies(&p);
        // eB/m* for B = 2.3 T, m* = 0.066 m_e, evaluated by hand from CODATA.
        let expected = 1.602176634e-19 * 2.3 / (0.066 * 9.1093837015e-31) * 1e-12;
        for l in 0..w.len() - 1 {
            assert!(((w[l + 1] - w[l]) - expected).abs() < 1e-10 * expected);
        }
        assert!((angular_to_thz(expected) - 0.9755).abs() < 1e-3);
    }

    #[test]
    fn fermi_matched_spacing() {
        let p = LandauParams {
            level_spectrum: LevelSpectrum::FermiMatched,
            ..LandauParams::default()
        };
        let w = landau_frequencies(&p);
        let np = LandauParams::default().fermi_transition();
        assert!(((w[1] - w[0]) - np).abs() < 1e-12);
        assert!(((w[50] - w[49]) - np).abs() < 1e-10);
    }

    #[test]
    fn dipoles_scale_with_upper_index() {
        let p = LandauParams::default();
        let d = dipole_moments(&p);
        assert_eq!(d.len(), p.n_levels - 1);
        assert!((d[1] / d[0] - 2f64.sqrt()).abs() < 1e-15);
        let l0 = magnetic_length(2.3);
        assert!((l0 * 1e9 - 16.9).abs() < 0.05);
        assert!((d[0] - ELEMENTARY_CHARGE * l0).abs() < 1e-40);
    }

    #[test]
    fn hamiltonian_couples_neighbours_only() {
        let p = LandauParams {
            n_levels: 12,
            filling: 4.5,
            ..LandauParams::default()
        };
        let rho = equilibrium_rho(&p);
        let h = build_hamiltonian(&rho, [Complex64::new(0.3, 0.1), Complex64::new(-0.1, 0.2)], &p)
            .unwrap();
        assert!(h.hermiticity_drift() == 0.0);
        for m in 0..12usize {
            for n in 0..12 {
                if m.abs_diff(n) > 1 {
                    assert_eq!(h.get(m, n), ZERO);
                }
            }
        }
        let h0 = build_hamiltonian(&rho, [ZERO; 2], &p).unwrap();
        for m in 0..11 {
            assert_eq!(h0.get(m, m + 1), ZERO);
        }
    }

    #[test]
    fn energy_renormalization_scales_levels() {
        let p = LandauParams {
            n_levels: 20,
            filling: 5.0,
            ..LandauParams::default()
        };
        let mut rho = equilibrium_rho(&p);
        // One electron from level 4 to 6: Δn_4 = −1 (l = −1), Δn_6 = +1 (l = 2),
        // ρ_exc = ½(1 + 2) = 1.5; shift until ρ_exc = 1 instead by moving half.
        rho.set(4, 4, (1.0 - 2.0 / 3.0).into());
        rho.set(6, 6, (2.0 / 3.0).into());
        let exc = rho_exc(&rho, &equilibrium_rho(&p), 5, ExcitationMeasure::Signed).unwrap();
        assert!((exc - 1.0).abs() < 1e-12);
        let h = build_hamiltonian(&rho, [ZERO; 2], &p).unwrap();
        let w = landau_frequencies(&p);
        for m in 0..20 {
            assert!((h.get(m, m).re - w[m] / 1.016).abs() < 1e-9 * w[m]);
        }
        let ren0 = Renormalization::at(&p, 0.0);
        assert_eq!(ren0.energy, 1.0);
        assert_eq!(ren0.dipole, 1.0);
    }

    #[test]
    fn equilibrium_distribution() {
        let p = LandauParams::default();
        let rho = equilibrium_rho(&p);
        for m in 0..15 {
            assert_eq!(rho.get(m, m).re, 1.0);
        }
        assert!((rho.get(15, 15).re - 0.73).abs() < 1e-12);
        assert_eq!(rho.get(16, 16).re, 0.0);
        assert!((rho.trace().re - 15.73).abs() < 1e-12);
        let empty = equilibrium_rho(&LandauParams {
            filling: 0.0,
            ..LandauParams::default()
        });
        assert!(empty.data.iter().all(|c| *c == ZERO));
    }

    #[test]
    fn excitation_measure_examples() {
        let p = LandauParams {
            n_levels: 30,
            filling: 10.0,
            ..LandauParams::default()
        };
        let rho0 = equilibrium_rho(&p);
        assert_eq!(rho_exc(&rho0, &rho0, 10, ExcitationMeasure::Signed).unwrap(), 0.0);
        let mut rho = rho0.clone();
        rho.set(9, 9, 0.0.into());
        rho.set(11, 11, 1.0.into());
        let e = rho_exc(&rho, &rho0, 10, ExcitationMeasure::Signed).unwrap();
        assert!((e - 1.5).abs() < 1e-15);
        let a = rho_exc(&rho, &rho0, 10, ExcitationMeasure::Absolute).unwrap();
        assert!((a - 1.5).abs() < 1e-15);
        let small = equilibrium_rho(&LandauParams {
            n_levels: 10,
            filling: 3.0,
            ..LandauParams::default()
        });
        assert!(rho_exc(&rho, &small, 10, ExcitationMeasure::Signed).is_err());
    }

    #[test]
    fn excitation_density_conversion() {
        let p = LandauParams::default();
        // 2eB/ħ at 2.3 T ≈ 6.99e11 cm⁻², so ρ_exc ≈ 0.994 corresponds to the
        // reference excitation density.
        let dos = p.excitation_density(1.0);
        assert!((dos / 6.9886e11 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let p = LandauParams {
            n_levels: 40,
            ..LandauParams::default()
        };
        let drive = Waveform::zeros(crate::pulses::TimeGrid::spanning(0.0, 2.0, 0.001).unwrap());
        let run = run_landau(&p, &drive, RecordOptions::default()).unwrap();
        let rho0 = equilibrium_rho(&p);
        assert_eq!(run.final_state.rho, rho0);
        assert!(run.emitted.samples.iter().all(|&e| e == 0.0));
        assert!(run.trace.rho_exc.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn band_derivative_matches_dense_commutator() {
        let p = LandauParams {
            n_levels: 9,
            filling: 3.4,
            t1: 1e9,
            t2_base: 1e9,
            phonon_window: false,
            ..LandauParams::default()
        };
        // A Hermitian, trace-preserving perturbation of equilibrium.
        let mut rho = equilibrium_rho(&p);
        for m in 0..9 {
            for k in 1..9 - m {
                let v = Complex64::new(0.01 * (m + k) as f64, -0.02 * k as f64);
                rho.set(m, m + k, v);
                rho.set(m + k, m, v.conj());
            }
        }
        let alpha = [Complex64::new(0.4, -0.2), Complex64::new(0.1, 0.3)];
        let state = LandauState {
            rho: rho.clone(),
            alpha,
            time: 0.0,
        };
        let mut solver = LandauSolver::new(&p).unwrap();
        let y = solver.pack(&state);
        solver.refresh_renormalization(&y);
        let mut dy = vec![ZERO; y.len()];
        solver.rhs(0.0, &y, &mut dy);
        let dense = solver.unpack(&dy, 0.0).rho;

        let mut h = build_hamiltonian(&rho, alpha, &p).unwrap();
        // Remove the constant ω_{j_f}·f_e from the diagonal to match the solver.
        let shift = h.get(3, 3);
        for m in 0..9 {
            let v = h.get(m, m) - shift;
            h.set(m, m, v);
        }
        let comm = h.commutator(&rho);
        for m in 0..9 {
            for n in m..9 {
                let expected = -I * comm.get(m, n);
                assert!(
                    (dense.get(m, n) - expected).norm() < 1e-9,
                    "({m},{n}) {} vs {}",
                    dense.get(m, n),
                    expected
                );
            }
        }
    }
}
