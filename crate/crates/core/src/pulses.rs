//! Single-cycle THz waveforms and the two-pulse schedule.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::units::fmt_sig9;

/// Uniformly sampled real field; time in ps, field in kV/cm.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
}

/// Uniform time grid `t0 + k·dt`, `k = 0..n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() || !t0.is_finite() {
            return Err(Error::invalid("grid", "dt must be > 0 and t0 finite"));
        }
        if n < 2 {
            return Err(Error::invalid("grid", "at least 2 samples required"));
        }
        Ok(Self { t0, dt, n })
    }

    /// Grid covering `[start, stop]` inclusive at spacing `dt`.
    pub fn spanning(start: f64, stop: f64, dt: f64) -> Result<Self> {
        let n = ((stop - start) / dt).round() as usize + 1;
        Self::new(start, dt, n)
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn span(&self) -> f64 {
        (self.n - 1) as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.time(self.n - 1)
    }
}

impl Waveform {
    pub fn new(t0: f64, dt: f64, samples: Vec<f64>) -> Result<Self> {
        TimeGrid::new(t0, dt, samples.len())?;
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("samples", "field must be finite everywhere"));
        }
        Ok(Self { t0, dt, samples })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            t0: grid.t0,
            dt: grid.dt,
            samples: vec![0.0; grid.n],
        }
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid {
            t0: self.t0,
            dt: self.dt,
            n: self.samples.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn peak_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Four-point cubic interpolation (linear in the outermost intervals);
    /// zero outside the sampled span.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.samples.len();
        let x = (t - self.t0) / self.dt;
        if x < 0.0 || x > (n - 1) as f64 {
            return 0.0;
        }
        let k = (x.floor() as usize).min(n - 2);
        let f = x - k as f64;
        let s = &self.samples;
        if k == 0 || k + 2 >= n {
            return s[k] * (1.0 - f) + s[k + 1] * f;
        }
        let (a, b, c, d) = (s[k - 1], s[k], s[k + 1], s[k + 2]);
        -a * f * (f - 1.0) * (f - 2.0) / 6.0 + b * (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0
            - c * (f + 1.0) * f * (f - 2.0) / 2.0
            + d * (f + 1.0) * f * (f - 1.0) / 6.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            t0: self.t0,
            dt: self.dt,
            samples: self.samples.iter().map(|v| v * factor).collect(),
        }
    }

    /// Re-expresses this waveform on `grid` (same spacing, sample-aligned),
    /// zero-padding or cropping as needed.
    pub fn on_grid(&self, grid: TimeGrid) -> Result<Self> {
        let offset = grid_offset(self.t0, grid.t0, self.dt)?;
        if !same_spacing(self.dt, grid.dt) {
            return Err(Error::GridMismatch(format!(
                "spacing {} vs {}",
                self.dt, grid.dt
            )));
        }
        let mut out = vec![0.0; grid.n];
        for (k, slot) in out.iter_mut().enumerate() {
            let src = k as i64 + offset;
            if src >= 0 && (src as usize) < self.samples.len() {
                *slot = self.samples[src as usize];
            }
        }
        Ok(Self {
            t0: grid.t0,
            dt: grid.dt,
            samples: out,
        })
    }

    /// Writes the two-column text format.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# time_ps field_kV_per_cm\n");
        for (k, v) in self.samples.iter().enumerate() {
            out.push_str(&fmt_sig9(self.time(k)));
            out.push(' ');
            out.push_str(&fmt_sig9(*v));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn same_spacing(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

/// Integer sample offset between two grid origins, or an error when the
/// origins are not aligned.
fn grid_offset(from_t0: f64, to_t0: f64, dt: f64) -> Result<i64> {
    let shift = (to_t0 - from_t0) / dt;
    let rounded = shift.round();
    if (shift - rounded).abs() > 1e-6 {
        return Err(Error::GridMismatch(format!(
            "origins {from_t0} and {to_t0} are not aligned to spacing {dt}"
        )));
    }
    Ok(rounded as i64)
}

/// Parameters of a synthesized single-cycle pulse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleCycle {
    /// Carrier frequency (THz).
    pub center_freq: f64,
    /// Full width at half maximum of the Gaussian field envelope (ps).
    pub envelope_fwhm: f64,
    /// Global extremum of the field (kV/cm).
    pub peak_amplitude: f64,
    /// Envelope center (ps).
    pub center_time: f64,
    /// Carrier-envelope phase (rad); zero gives a cosine carrier.
    pub cep: f64,
}

impl SingleCycle {
    pub fn new(center_freq: f64, envelope_fwhm: f64, peak_amplitude: f64) -> Self {
        Self {
            center_freq,
            envelope_fwhm,
            peak_amplitude,
            center_time: 0.0,
            cep: 0.0,
        }
    }
}

impl Default for SingleCycle {
    fn default() -> Self {
        Self::new(1.0, 1.0, 1.0)
    }
}

/// Gaussian-enveloped carrier with the DC component removed.
///
/// The field is `G(t)·[cos(2πf(t − t_c) + φ) − c]` where `c` is fixed so that
/// the discrete time integral vanishes, then scaled so that the largest
/// `|E|` equals the requested peak.
pub fn synth_single_cycle(pulse: &SingleCycle, grid: TimeGrid) -> Result<Waveform> {
    if !(pulse.center_freq > 0.0) {
        return Err(Error::invalid("center_freq", "must be > 0"));
    }
    if !(pulse.envelope_fwhm > 0.0) {
        return Err(Error::invalid("envelope_fwhm", "must be > 0"));
    }
    if !(pulse.peak_amplitude >= 0.0) || !pulse.peak_amplitude.is_finite() {
        return Err(Error::invalid("peak_amplitude", "must be finite and >= 0"));
    }
    let needed = 6.0 * pulse.envelope_fwhm;
    if grid.span() < needed {
        return Err(Error::GridUnderrun {
            needed,
            available: grid.span(),
        });
    }
    let sigma = pulse.envelope_fwhm / (2.0 * (2.0 * 2f64.ln()).sqrt());
    let omega = 2.0 * PI * pulse.center_freq;
    let envelope: Vec<f64> = (0..grid.n)
        .map(|k| {
            let x = grid.time(k) - pulse.center_time;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let carrier: Vec<f64> = (0..grid.n)
        .map(|k| (omega * (grid.time(k) - pulse.center_time) + pulse.cep).cos())
        .collect();
    let env_sum: f64 = envelope.iter().sum();
    let dc: f64 = envelope.iter().zip(&carrier).map(|(g, c)| g * c).sum::<f64>() / env_sum;
    let shape: Vec<f64> = envelope
        .iter()
        .zip(&carrier)
        .map(|(g, c)| g * (c - dc))
        .collect();
    let extremum = shape.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let norm = 1.0 / extremum;
    let samples = shape
        .iter()
        .map(|v| (v * norm) * pulse.peak_amplitude)
        .collect();
    Waveform::new(grid.t0, grid.dt, samples)
}

/// Parses the two-column text format. Non-uniform time columns are resampled
/// by linear interpolation onto the median spacing.
pub fn parse_waveform(text: &str, origin: &Path) -> Result<Waveform> {
    let perr = |line: usize, reason: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        reason,
    };
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split_whitespace();
        let (Some(t), Some(v)) = (cols.next(), cols.next()) else {
            return Err(perr(idx + 1, "expected two columns".into()));
        };
        let t: f64 = t.parse().map_err(|e| perr(idx + 1, format!("time: {e}")))?;
        let v: f64 = v.parse().map_err(|e| perr(idx + 1, format!("field: {e}")))?;
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(perr(idx + 1, "time column is not strictly increasing".into()));
            }
        }
        times.push(t);
        values.push(v);
    }
    if times.len() < 2 {
        return Err(perr(0, "fewer than 2 rows".into()));
    }
    let mut diffs: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    diffs.sort_by(f64::total_cmp);
    let median = if diffs.len() % 2 == 1 {
        diffs[diffs.len() / 2]
    } else {
        0.5 * (diffs[diffs.len() / 2 - 1] + diffs[diffs.len() / 2])
    };
    let n = times.len();
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - median).abs() <= 1e-6 * median);
    if uniform {
        let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
        return Waveform::new(times[0], dt, values);
    }
    let count = ((times[n - 1] - times[0]) / median).floor() as usize + 1;
    let mut samples = Vec::with_capacity(count);
    let mut seg = 0;
    for k in 0..count {
        let t = times[0] + k as f64 * median;
        while seg + 2 < n && times[seg + 1] < t {
            seg += 1;
        }
        let (ta, tb) = (times[seg], times[seg + 1]);
        let f = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        samples.push(values[seg] * (1.0 - f) + values[seg + 1] * f);
    }
    Waveform::new(times[0], median, samples)
}

pub fn load_waveform(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_waveform(&text, path)
}

/// Which pulses are incident.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Combination {
    A,
    B,
    AB,
}

/// Two pulses and their relative delay.
///
/// Pulse A defines the time origin of the experiment; pulse B is delayed by
/// `tau`, so B's phase fronts run along `t − τ = const`.
#[derive(Clone, Debug, PartialEq)]
pub struct PulsePair {
    pub pulse_a: Waveform,
    pub pulse_b: Waveform,
    /// Delay of pulse B relative to pulse A (ps).
    pub tau: f64,
}

impl PulsePair {
    pub fn with_tau(&self, tau: f64) -> Self {
        Self {
            tau,
            ..self.clone()
        }
    }
}

/// Snaps a delay to the nearest integer multiple of `dt`.
pub fn snap_delay(tau: f64, dt: f64) -> f64 {
    (tau / dt).round() * dt
}

/// Sample shift corresponding to `tau`, or an error if `tau` is off-grid.
pub fn delay_steps(tau: f64, dt: f64) -> Result<i64> {
    let x = tau / dt;
    let r = x.round();
    if (x - r).abs() > 1e-6 {
        return Err(Error::DelayOffGrid { tau, dt });
    }
    Ok(r as i64)
}

/// Returns the incident field for one chopper combination on the union grid
/// of pulse A and the delayed pulse B.
pub fn schedule(pair: &PulsePair, combination: Combination) -> Result<Waveform> {
    let a = &pair.pulse_a;
    let b = &pair.pulse_b;
    if !same_spacing(a.dt, b.dt) {
        return Err(Error::GridMismatch(format!(
            "pulse spacings differ: {} vs {}",
            a.dt, b.dt
        )));
    }
    let dt = a.dt;
    let shift = delay_steps(pair.tau, dt)?;
    grid_offset(a.t0, b.t0, dt)?;
    let b_t0 = b.t0 + shift as f64 * dt;
    let start = a.t0.min(b_t0);
    let end = a.time(a.len() - 1).max(b_t0 + (b.len() - 1) as f64 * dt);
    let n = ((end - start) / dt).round() as usize + 1;
    let grid = TimeGrid::new(start, dt, n)?;
    let shifted_b = Waveform {
        t0: b_t0,
        dt,
        samples: b.samples.clone(),
    };
    match combination {
        Combination::A => a.on_grid(grid),
        Combination::B => shifted_b.on_grid(grid),
        Combination::AB => {
            let wa = a.on_grid(grid)?;
            let wb = shifted_b.on_grid(grid)?;
            let samples = wa
                .samples
                .iter()
                .zip(&wb.samples)
                .map(|(x, y)| x + y)
                .collect();
            Ok(Waveform {
                t0: grid.t0,
                dt,
                samples,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rustfft::{num_complex::Complex64, FftPlanner};

    fn default_grid() -> TimeGrid {
        TimeGrid::spanning(-2.0, 8.0, 0.001).unwrap()
    }

    fn spectrum(w: &Waveform) -> Vec<f64> {
        let mut buf: Vec<Complex64> = w.samples.iter().map(|&v| v.into()).collect();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        buf.iter().map(|c| c.norm()).collect()
    }

    #[test]
    fn zero_amplitude_is_all_zero() {
        let w = synth_single_cycle(&SingleCycle::new(1.0, 1.0, 0.0), default_grid()).unwrap();
        assert!(w.samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spectrum_peaks_at_carrier_without_dc() {
        let w = synth_single_cycle(&SingleCycle::new(1.0, 1.0, 2.5), default_grid()).unwrap();
        let s = spectrum(&w);
        let half = &s[..s.len() / 2];
        let (kmax, &peak) = half
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let df = 1.0 / (w.len() as f64 * w.dt);
        assert!((kmax as f64 * df - 1.0).abs() < 0.1, "peak at {}", kmax as f64 * df);
        assert!(s[0] < 1e-6 * peak);
        assert!((w.peak_abs() - 2.5).abs() < 2.5e-3);
    }

    #[test]
    fn amplitude_ratio_is_exact() {
        let g = default_grid();
        let a = synth_single_cycle(&SingleCycle::new(1.0, 1.0, 1.3), g).unwrap();
        let b = synth_single_cycle(&SingleCycle::new(1.0, 1.0, 2.6), g).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            if *y != 0.0 {
                assert_eq!(x / y, 0.5);
            }
        }
    }

    #[test]
    fn short_grid_underruns() {
        let g = TimeGrid::spanning(0.0, 4.0, 0.01).unwrap();
        let err = synth_single_cycle(&SingleCycle::new(1.0, 1.0, 1.0), g).unwrap_err();
        assert!(err.to_string().contains("grid underruns pulse support"));
    }

    #[test]
    fn parse_simple_file() {
        let w = parse_waveform("# comment\n0 0\n0.1 1\n0.2 0\n", Path::new("x")).unwrap();
        assert_eq!(w.t0, 0.0);
        assert!((w.dt - 0.1).abs() < 1e-15);
        assert_eq!(w.samples, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn parse_rejects_bad_time_columns() {
        assert!(parse_waveform("0 0\n0.2 1\n0.1 0\n", Path::new("x")).is_err());
        assert!(parse_waveform("0 0\n", Path::new("x")).is_err());
        assert!(parse_waveform("0 0\n0.1\n", Path::new("x")).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pulse.txt");
        let w = synth_single_cycle(&SingleCycle::new(1.0, 1.0, 2.5), default_grid()).unwrap();
        w.save(&path).unwrap();
        let back = load_waveform(&path).unwrap();
        assert_eq!(back.len(), w.len());
        assert!((back.dt - w.dt).abs() < 1e-12);
        for (a, b) in back.samples.iter().zip(&w.samples) {
            assert!((a - b).abs() < 2e-8);
        }
    }

    #[test]
    fn jittered_time_column_is_resampled() {
        let dt = 0.01;
        let grid = TimeGrid::spanning(-4.0, 6.0, dt).unwrap();
        let sigma = 0.4;
        let field = |t: f64| (-t * t / (2.0 * sigma * sigma)).exp() * (2.0 * PI * t).cos();
        let clean = Waveform::new(
            grid.t0,
            dt,
            (0..grid.n).map(|k| field(grid.time(k))).collect(),
        )
        .unwrap();
        // Deterministic ±1% jitter of the sampling instants.
        let mut text = String::new();
        for k in 0..grid.n {
            let jitter = if k == 0 || k == grid.n - 1 {
                0.0
            } else {
                0.01 * dt * (k as f64 * 1.7).sin()
            };
            let t = grid.time(k) + jitter;
            text.push_str(&format!("{} {}\n", t, field(t)));
        }
        let loaded = parse_waveform(&text, Path::new("jitter")).unwrap();
        assert!((loaded.dt - dt).abs() < 0.01 * dt);
        let a = spectrum(&clean);
        let b = spectrum(&loaded.on_grid(grid).unwrap_or(loaded.clone()));
        let n = a.len().min(b.len()) / 2;
        let rms_ref = (a[..n].iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        let rms_diff = (a[..n]
            .iter()
            .zip(&b[..n])
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            / n as f64)
            .sqrt();
        assert!(rms_diff / rms_ref < 0.01, "{}", rms_diff / rms_ref);
    }

    fn pair(tau: f64) -> PulsePair {
        let g = default_grid();
        PulsePair {
            pulse_a: synth_single_cycle(&SingleCycle::new(1.0, 1.0, 1.3), g).unwrap(),
            pulse_b: synth_single_cycle(&SingleCycle::new(1.0, 1.0, 2.5), g).unwrap(),
            tau,
        }
    }

    #[test]
    fn identical_pulses_at_zero_delay_double() {
        let g = default_grid();
        let w = synth_single_cycle(&SingleCycle::new(1.0, 1.0, 1.0), g).unwrap();
        let p = PulsePair {
            pulse_a: w.clone(),
            pulse_b: w.clone(),
            tau: 0.0,
        };
        let ab = schedule(&p, Combination::AB).unwrap();
        assert_eq!(ab.samples, w.samples.iter().map(|v| 2.0 * v).collect::<Vec<_>>());
    }

    #[test]
    fn quarter_period_delay_interferes_destructively() {
        let p0 = schedule(&pair(0.0), Combination::AB).unwrap().peak_abs();
        let p1 = schedule(&pair(0.25), Combination::AB).unwrap().peak_abs();
        assert!(p1 < p0);
    }

    #[test]
    fn single_pulse_combinations() {
        let p = pair(0.5);
        let a = schedule(&p, Combination::A).unwrap();
        let b = schedule(&p, Combination::B).unwrap();
        assert_eq!(a.t0, p.pulse_a.t0);
        assert_eq!(a.len(), p.pulse_a.len() + 500);
        assert_eq!(&a.samples[..p.pulse_a.len()], &p.pulse_a.samples[..]);
        assert!(a.samples[p.pulse_a.len()..].iter().all(|&v| v == 0.0));
        assert!(b.samples[..500].iter().all(|&v| v == 0.0));
        assert_eq!(&b.samples[500..], &p.pulse_b.samples[..]);
    }

    #[test]
    fn off_grid_delay_is_rejected() {
        assert!(matches!(
            schedule(&pair(0.0005), Combination::AB),
            Err(Error::DelayOffGrid { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn ab_is_sum_of_parts(steps in -300i64..300) {
            let p = pair(steps as f64 * 0.001);
            let a = schedule(&p, Combination::A).unwrap();
            let b = schedule(&p, Combination::B).unwrap();
            let ab = schedule(&p, Combination::AB).unwrap();
            for k in 0..ab.len() {
                prop_assert_eq!(ab.samples[k], a.samples[k] + b.samples[k]);
            }
        }

        #[test]
        fn synthesis_is_homothetic_and_dc_free(
            peak in 0.01f64..10.0, f in 0.5f64..2.0, fwhm in 0.5f64..1.5, factor in 0.1f64..5.0
        ) {
            let g = default_grid();
            let w = synth_single_cycle(&SingleCycle::new(f, fwhm, peak), g).unwrap();
            let w2 = synth_single_cycle(&SingleCycle::new(f, fwhm, peak * factor), g).unwrap();
            let shape = synth_single_cycle(&SingleCycle::new(f, fwhm, 1.0), g).unwrap();
            for k in 0..w.len() {
                prop_assert_eq!(w.samples[k], shape.samples[k] * peak);
                prop_assert_eq!(w2.samples[k], shape.samples[k] * (peak * factor));
            }
            let mean = w.samples.iter().sum::<f64>() / w.len() as f64;
            prop_assert!(mean.abs() < 1e-6 * w.peak_abs());
        }
    }
}
