//! Mean-field dynamics of two cavity modes coupled to one bosonic matter mode.
//!
//! This is the weak-field reference model: strictly linear in the drive, so
//! its extracted nonlinear field vanishes identically.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hopfield::normal_mode_frequencies;
use crate::pulses::Waveform;
use crate::rk4::{all_finite, ComplexOde, Rk4};
use crate::units::{fmt_sig9, thz_to_angular};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest step (ps) accepted by the steppers.
pub const MAX_STEP: f64 = 0.002;

/// One resonator mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CavityMode {
    /// Mode angular frequency (rad/ps).
    pub omega: f64,
    /// Amplitude damping rate (rad/ps).
    pub gamma: f64,
    /// Far-field coupling factor (dimensionless).
    pub kappa: f64,
    /// Vacuum Rabi angular frequency to the cyclotron transition (rad/ps).
    pub omega_rabi_vac: f64,
}

impl CavityMode {
    /// Diamagnetic shift `Ω²/ω_c`.
    pub fn diamagnetic(&self, omega_c: f64) -> f64 {
        self.omega_rabi_vac * self.omega_rabi_vac / omega_c
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BosonicParams {
    pub lc: CavityMode,
    pub dp: CavityMode,
    /// Cyclotron angular frequency (rad/ps).
    pub omega_c: f64,
    /// Matter amplitude damping (rad/ps).
    pub gamma_matter: f64,
    /// Field-to-rate conversion, (rad/ps)^½ per kV/cm.
    pub drive_scale: f64,
}

/// Weak-drive field-to-rate conversion. The scenario presets use the
/// calibrated `scenario::CALIBRATED_DRIVE_SCALE` instead.
pub const DEFAULT_DRIVE_SCALE: f64 = 0.05;

impl Default for BosonicParams {
    /// Effective two-mode resonator at the anti-crossing (`ν_c = 0.868 THz`).
    fn default() -> Self {
        Self {
            lc: CavityMode {
                omega: thz_to_angular(0.86),
                gamma: thz_to_angular(0.10),
                kappa: 1.0,
                omega_rabi_vac: thz_to_angular(0.41),
            },
            dp: CavityMode {
                omega: thz_to_angular(1.5),
                gamma: thz_to_angular(0.20),
                kappa: 1.5,
                omega_rabi_vac: thz_to_angular(0.24),
            },
            omega_c: thz_to_angular(0.868),
            gamma_matter: thz_to_angular(0.05),
            drive_scale: DEFAULT_DRIVE_SCALE,
        }
    }
}

impl BosonicParams {
    /// Bare-resonator preset (LC 0.81 THz, DP 1.8 THz).
    pub fn bare_resonator() -> Self {
        let mut p = Self::default();
        p.lc.omega = thz_to_angular(0.81);
        p.dp.omega = thz_to_angular(1.8);
        p
    }

    pub fn modes(&self) -> [&CavityMode; 2] {
        [&self.lc, &self.dp]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, m) in [("lc", &self.lc), ("dp", &self.dp)] {
            if !(m.gamma >= 0.0) {
                return Err(Error::invalid(format!("{name}.gamma"), "must be >= 0"));
            }
            if !(m.omega >= 0.0) || !(m.omega_rabi_vac >= 0.0) || !m.kappa.is_finite() {
                return Err(Error::invalid(name, "frequencies must be >= 0"));
            }
        }
        if !(self.omega_c > 0.0) {
            return Err(Error::invalid("omega_c", "must be > 0"));
        }
        if !(self.gamma_matter >= 0.0) {
            return Err(Error::invalid("gamma_matter", "must be >= 0"));
        }
        if !(self.drive_scale > 0.0) || !self.drive_scale.is_finite() {
            return Err(Error::invalid("drive_scale", "must be finite and > 0"));
        }
        Ok(())
    }

    /// Polariton frequencies (THz, ascending) of the linearized system,
    /// ignoring damping.
    pub fn polariton_frequencies(&self) -> Result<Vec<f64>> {
        let modes: Vec<(f64, f64)> = self
            .modes()
            .iter()
            .map(|m| (m.omega, m.omega_rabi_vac))
            .collect();
        normal_mode_frequencies(&modes, self.omega_c)
    }

    /// Field radiated by the cavity modes for the given amplitudes (kV/cm),
    /// i.e. the part subtracted from the incident field.
    pub fn reradiated(&self, alpha: [Complex64; 2]) -> f64 {
        self.modes()
            .iter()
            .zip(alpha)
            .map(|(m, a)| m.gamma.sqrt() * 2.0 * a.re)
            .sum::<f64>()
            / self.drive_scale
    }

    /// Cavity equation of motion shared with the Landau solver; `polarization`
    /// is the dimensionless matter polarization (`β + β*` here).
    pub(crate) fn cavity_rhs(
        &self,
        alpha: [Complex64; 2],
        polarization: f64,
        field: f64,
    ) -> [Complex64; 2] {
        let mut out = [Complex64::new(0.0, 0.0); 2];
        for (j, m) in self.modes().iter().enumerate() {
            let a = alpha[j];
            let d = m.diamagnetic(self.omega_c);
            out[j] = -I * m.omega * a - m.gamma * a - I * m.omega_rabi_vac * polarization
                - I * (2.0 * d * 2.0 * a.re)
                + m.kappa * m.gamma.sqrt() * self.drive_scale * field;
        }
        out
    }
}

/// `(α_LC, α_DP, β)` at one instant.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BosonicState {
    pub alpha: [Complex64; 2],
    pub beta: Complex64,
}

impl BosonicState {
    fn to_vec(self) -> [Complex64; 3] {
        [self.alpha[0], self.alpha[1], self.beta]
    }

    fn from_slice(y: &[Complex64]) -> Self {
        Self {
            alpha: [y[0], y[1]],
            beta: y[2],
        }
    }

    /// `Σ|α_j|² + |β|²`.
    pub fn quanta(&self) -> f64 {
        self.alpha.iter().map(|a| a.norm_sqr()).sum::<f64>() + self.beta.norm_sqr()
    }
}

struct BosonicOde<'a> {
    params: &'a BosonicParams,
    drive: &'a Waveform,
}

impl ComplexOde for BosonicOde<'_> {
    fn derivative(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let p = self.params;
        let field = self.drive.value_at(t);
        let beta = y[2];
        let cav = p.cavity_rhs([y[0], y[1]], 2.0 * beta.re, field);
        dy[0] = cav[0];
        dy[1] = cav[1];
        let source: f64 = p
            .modes()
            .iter()
            .zip(&y[..2])
            .map(|(m, a)| m.omega_rabi_vac * 2.0 * a.re)
            .sum();
        dy[2] = -I * p.omega_c * beta - p.gamma_matter * beta - I * source;
    }
}

/// Advances the state by one RK4 step of length `dt` starting at `t`.
pub fn step_bosonic(
    state: BosonicState,
    drive: &Waveform,
    params: &BosonicParams,
    t: f64,
    dt: f64,
) -> Result<BosonicState> {
    if !(dt > 0.0 && dt <= MAX_STEP + 1e-15) {
        return Err(Error::invalid("dt", format!("must be in (0, {MAX_STEP}] ps")));
    }
    let mut ode = BosonicOde { params, drive };
    let mut y = state.to_vec();
    Rk4::new(3).step(&mut ode, t, dt, &mut y);
    if !all_finite(&y) {
        return Err(Error::Diverged { time: t + dt });
    }
    Ok(BosonicState::from_slice(&y))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BosonicTrajectory {
    pub t0: f64,
    pub dt: f64,
    pub alpha: Vec<[Complex64; 2]>,
    pub beta: Vec<Complex64>,
    /// Transmitted field (kV/cm).
    pub e_measured: Vec<f64>,
}

impl BosonicTrajectory {
    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    pub fn emitted(&self) -> Waveform {
        Waveform {
            t0: self.t0,
            dt: self.dt,
            samples: self.e_measured.clone(),
        }
    }

    /// `β + β*` at every sample.
    pub fn polarization(&self) -> Vec<f64> {
        self.beta.iter().map(|b| 2.0 * b.re).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "t_ps,re_alpha_lc,im_alpha_lc,re_alpha_dp,im_alpha_dp,re_beta,im_beta,e_measured\n",
        );
        for k in 0..self.len() {
            let a = self.alpha[k];
            let b = self.beta[k];
            let cols = [
                self.t0 + k as f64 * self.dt,
                a[0].re,
                a[0].im,
                a[1].re,
                a[1].im,
                b.re,
                b.im,
                self.e_measured[k],
            ];
            let line: Vec<String> = cols.iter().map(|v| fmt_sig9(*v)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Integrates from the zero state over the full drive grid, one step per
/// drive sample.
pub fn run_bosonic(params: &BosonicParams, drive: &Waveform) -> Result<BosonicTrajectory> {
    params.validate()?;
    let dt = drive.dt;
    if dt > MAX_STEP + 1e-15 {
        return Err(Error::invalid("drive.dt", format!("must be <= {MAX_STEP} ps")));
    }
    let n = drive.len();
    let mut ode = BosonicOde { params, drive };
    let mut rk = Rk4::new(3);
    let mut y = BosonicState::default().to_vec();
    let mut traj = BosonicTrajectory {
        t0: drive.t0,
        dt,
        alpha: Vec::with_capacity(n),
        beta: Vec::with_capacity(n),
        e_measured: Vec::with_capacity(n),
    };
    for k in 0..n {
        let t = drive.time(k);
        if k > 0 {
            rk.step(&mut ode, drive.time(k - 1), dt, &mut y);
            if !all_finite(&y) {
                return Err(Error::Diverged { time: t });
            }
        }
        let alpha = [y[0], y[1]];
        traj.alpha.push(alpha);
        traj.beta.push(y[2]);
        traj.e_measured
            .push(drive.samples[k] - params.reradiated(alpha));
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulses::{synth_single_cycle, SingleCycle, TimeGrid};
    use rustfft::FftPlanner;

    fn grid() -> TimeGrid {
        TimeGrid::spanning(-2.0, 8.0, 0.001).unwrap()
    }

    fn pulse(peak: f64) -> Waveform {
        synth_single_cycle(&SingleCycle::new(1.0, 1.0, peak), grid()).unwrap()
    }

    fn uncoupled() -> BosonicParams {
        let mut p = BosonicParams::default();
        p.lc.omega_rabi_vac = 0.0;
        p.dp.omega_rabi_vac = 0.0;
        p
    }

    #[test]
    fn zero_drive_stays_zero() {
        let t = run_bosonic(&BosonicParams::default(), &Waveform::zeros(grid())).unwrap();
        assert!(t.beta.iter().all(|b| *b == Complex64::new(0.0, 0.0)));
        assert!(t.e_measured.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn free_decay_matches_exponential() {
        let p = uncoupled();
        let drive = Waveform::zeros(TimeGrid::spanning(0.0, 10.0, 0.001).unwrap());
        let mut s = BosonicState {
            alpha: [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            beta: Complex64::new(0.0, 0.0),
        };
        // With Ω = 0 the diamagnetic term vanishes too.
        for k in 0..10_000 {
            s = step_bosonic(s, &drive, &p, k as f64 * 0.001, 0.001).unwrap();
        }
        let expected = (-p.lc.gamma * 10.0).exp();
        assert!((s.alpha[0].norm() - expected).abs() / expected < 1e-6);
    }

    #[test]
    fn step_rejects_large_dt_and_nan() {
        let p = BosonicParams::default();
        let d = Waveform::zeros(grid());
        assert!(step_bosonic(BosonicState::default(), &d, &p, 0.0, 0.01).is_err());
        let bad = BosonicState {
            alpha: [Complex64::new(f64::NAN, 0.0), Complex64::new(0.0, 0.0)],
            beta: Complex64::new(0.0, 0.0),
        };
        assert!(matches!(
            step_bosonic(bad, &d, &p, 0.0, 0.001),
            Err(Error::Diverged { .. })
        ));
    }

    #[test]
    fn response_is_linear_in_drive() {
        let p = BosonicParams::default();
        let a = pulse(1.3);
        let b = pulse(2.5).on_grid(grid()).unwrap();
        let mut sum = a.clone();
        for (s, v) in sum.samples.iter_mut().zip(&b.samples) {
            *s += 0.7 * v;
        }
        let ra = run_bosonic(&p, &a).unwrap();
        let rb = run_bosonic(&p, &b).unwrap();
        let rs = run_bosonic(&p, &sum).unwrap();
        let scale = rs.e_measured.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..rs.len() {
            let lin = ra.e_measured[k] + 0.7 * rb.e_measured[k];
            assert!((rs.e_measured[k] - lin).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn doubling_drive_doubles_response() {
        let p = BosonicParams::default();
        let r1 = run_bosonic(&p, &pulse(1.0)).unwrap();
        let r2 = run_bosonic(&p, &pulse(2.0)).unwrap();
        let d1 = pulse(1.0);
        for k in 0..r1.len() {
            assert!((r2.beta[k] - r1.beta[k] * 2.0).norm() <= 1e-12 * (1.0 + r2.beta[k].norm()));
            let e1 = r1.e_measured[k] - d1.samples[k];
            let e2 = r2.e_measured[k] - 2.0 * d1.samples[k];
            assert!((e2 - 2.0 * e1).abs() < 1e-12);
        }
    }

    #[test]
    fn lossless_cavity_limit_is_transparent() {
        // Vanishing damping decouples the cavity from the far field.
        let mut p = BosonicParams::default();
        p.lc.gamma = 1e-6;
        p.dp.gamma = 1e-6;
        let d = pulse(2.5);
        let r = run_bosonic(&p, &d).unwrap();
        let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
        let diff: Vec<f64> = r.e_measured.iter().zip(&d.samples).map(|(a, b)| a - b).collect();
        assert!(rms(&diff) < 0.05 * rms(&d.samples));
    }

    #[test]
    fn matter_only_quanta_decay_without_drive() {
        let p = uncoupled();
        let drive = Waveform::zeros(grid());
        let mut s = BosonicState {
            alpha: [Complex64::new(0.3, 0.1), Complex64::new(0.0, 0.2)],
            beta: Complex64::new(0.5, 0.0),
        };
        let mut last = s.quanta();
        for k in 0..2000 {
            s = step_bosonic(s, &drive, &p, k as f64 * 0.001, 0.001).unwrap();
            assert!(s.quanta() <= last + 1e-15);
            last = s.quanta();
        }
    }

    #[test]
    fn rk4_order_against_fine_reference() {
        let p = BosonicParams::default();
        let end_state = |h: f64| {
            let g = TimeGrid::spanning(-2.0, 2.0, h).unwrap();
            let d = synth_single_cycle(&SingleCycle::new(1.0, 0.6, 2.0), g).unwrap();
            let r = run_bosonic(&p, &d).unwrap();
            r.beta[r.len() - 1]
        };
        let reference = end_state(0.002 / 8.0);
        let e1 = (end_state(0.002) - reference).norm();
        let e2 = (end_state(0.001) - reference).norm();
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn ringdown_frequencies_match_diagonalization() {
        // Single LC mode, impulsive drive.
        let mut p = BosonicParams::default();
        p.dp.omega_rabi_vac = 0.0;
        p.dp.kappa = 0.0;
        p.lc.gamma = 0.05;
        p.gamma_matter = 0.05;
        p.omega_c = thz_to_angular(0.84);
        let g = TimeGrid::spanning(0.0, 60.0, 0.002).unwrap();
        let mut drive = Waveform::zeros(g);
        drive.samples[10] = 100.0;
        let r = run_bosonic(&p, &drive).unwrap();
        let mut buf: Vec<Complex64> = r.polarization().into_iter().map(Complex64::from).collect();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        let df = 1.0 / (buf.len() as f64 * g.dt);
        let mag: Vec<f64> = buf[..buf.len() / 2].iter().map(|c| c.norm()).collect();
        let modes = normal_mode_frequencies(&[(p.lc.omega, p.lc.omega_rabi_vac)], p.omega_c).unwrap();
        for nu in modes {
            let k = (nu / df).round() as usize;
            let lo = k - 3;
            let (kmax, _) = mag[lo..=k + 3]
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap();
            assert!((((lo + kmax) as f64) * df - nu).abs() <= df, "mode {nu}");
        }
    }
}
