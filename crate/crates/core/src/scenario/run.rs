use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use sha2::{Digest, Sha256};

use crate::bosonic::run_bosonic;
use crate::error::{Error, Result};
use crate::hopfield::{anticrossing_sweep, sweep_csv};
use crate::landau::{run_landau, InvariantReport, LandauRun, RecordOptions};
use crate::pulses::{schedule, Combination, Waveform};
use crate::spectroscopy::{
    add_noise, catalog_csv, classify_peaks, cut, enumerate_mixing_peaks, ensemble_stats,
    matrix_text, run_2d_experiment, spectrum_2d, Axis, Classification, EnsembleStats, Field,
    ScanOutcome, Spectrum2D,
};
use crate::units::fmt_sig9;

use super::config::{cut_name, parse_cut, ScenarioConfig, SystemKind};
use super::switchoff::{switch_off_cases, SwitchOffLedger};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FileDigest {
    /// Path relative to the output directory.
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Everything a scenario produced, in memory as well as on disk.
#[derive(Clone, Debug, Default)]
pub struct ScenarioReport {
    pub dir: PathBuf,
    pub files: Vec<FileDigest>,
    pub polaritons: Vec<f64>,
    pub linear: Option<Waveform>,
    pub ringdown: Option<LandauRun>,
    pub scan: Option<ScanOutcome>,
    pub spectrum: Option<Spectrum2D>,
    pub classification: Option<Classification>,
    pub stats: Option<EnsembleStats>,
    pub switchoff: Option<SwitchOffLedger>,
    /// Worst invariants over every density-matrix run.
    pub invariants: Option<InvariantReport>,
}

impl ScenarioReport {
    fn absorb(&mut self, inv: Option<&InvariantReport>) {
        let Some(inv) = inv else { return };
        match &mut self.invariants {
            Some(m) => m.absorb(inv),
            None => self.invariants = Some(inv.clone()),
        }
    }
}

/// Output directory writer; files are written one at a time and recorded
/// with their digests.
pub(crate) struct Bundle {
    dir: PathBuf,
    files: Vec<FileDigest>,
}

impl Bundle {
    pub(crate) fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub(crate) fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.files.retain(|f| f.name != name);
        self.files.push(FileDigest {
            name: name.to_string(),
            sha256: hex::encode(Sha256::digest(contents.as_bytes())),
            bytes: contents.len() as u64,
        });
        Ok(())
    }
}

/// Runs every analysis the config enables and writes the results plus
/// `manifest.toml` into `config.output_dir`. On failure the manifest records
/// the error next to whatever was written before it.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioReport> {
    config.validate()?;
    let mut bundle = Bundle::create(&config.output_dir)?;
    let mut report = ScenarioReport {
        dir: config.output_dir.clone(),
        ..ScenarioReport::default()
    };
    let outcome = execute(config, &mut bundle, &mut report);
    write_manifest(config, &bundle, &report, outcome.as_ref().err())?;
    report.files = bundle.files;
    outcome.map(|_| report)
}

fn execute(config: &ScenarioConfig, bundle: &mut Bundle, report: &mut ScenarioReport) -> Result<()> {
    let a = &config.analysis;
    report.polaritons = config.polaritons()?;
    let mut csv = String::from("branch,nu_THz\n");
    for (j, nu) in report.polaritons.iter().enumerate() {
        csv.push_str(&format!("{j},{}\n", fmt_sig9(*nu)));
    }
    bundle.write("polaritons.csv", &csv)?;

    if a.sweep {
        let d = a.sweep_step_thz;
        if !(d > 0.0) || a.sweep_stop_thz < a.sweep_start_thz {
            return Err(Error::Config {
                field: "analysis.sweep_step_thz".into(),
                reason: "needs step > 0 and stop >= start".into(),
            });
        }
        let n = ((a.sweep_stop_thz - a.sweep_start_thz) / d + 1e-9).floor() as usize + 1;
        let grid: Vec<f64> = (0..n).map(|k| a.sweep_start_thz + k as f64 * d).collect();
        let rows = anticrossing_sweep(&config.sweep_template(), &grid)?;
        bundle.write("anticrossing.csv", &sweep_csv(&rows))?;
    }

    let needs_pulses = a.linear || a.ringdown || a.scan || a.switchoff;
    if !needs_pulses {
        if a.catalog_order > 0 {
            write_catalog(config, bundle, report, None)?;
        }
        return Ok(());
    }
    let pair = config.pulse_pair()?;
    bundle.write("pulse_a.txt", &pair.pulse_a.to_text())?;
    bundle.write("pulse_b.txt", &pair.pulse_b.to_text())?;

    if a.linear {
        let emitted = match config.system {
            SystemKind::Bosonic => run_bosonic(&config.bosonic_params(), &pair.pulse_a)?.emitted(),
            SystemKind::Landau => {
                let run = run_landau(&config.landau_params()?, &pair.pulse_a, RecordOptions::default())?;
                report.absorb(Some(&run.invariants));
                run.emitted
            }
        };
        bundle.write("linear_emitted.txt", &emitted.to_text())?;
        bundle.write("transmission.csv", &transmission_csv(&pair.pulse_a, &emitted))?;
        report.linear = Some(emitted);
    }

    if a.ringdown {
        let drive = schedule(&pair.with_tau(a.ringdown_tau_ps), Combination::AB)?;
        match config.system {
            SystemKind::Bosonic => {
                let traj = run_bosonic(&config.bosonic_params(), &drive)?;
                bundle.write("ringdown.csv", &traj.to_csv())?;
            }
            SystemKind::Landau => {
                let record = RecordOptions {
                    population_stride: Some(a.population_stride),
                };
                let run = run_landau(&config.landau_params()?, &drive, record)?;
                bundle.write("ringdown.csv", &run.observables_csv())?;
                let tr = &run.trace;
                let rows = Axis::new(
                    "t",
                    "ps",
                    tr.t0,
                    tr.dt * tr.population_stride as f64,
                    tr.populations.len(),
                )?;
                let levels = tr.populations.first().map_or(0, Vec::len);
                let cols = Axis::new("level", "index", 0.0, 1.0, levels.max(1))?;
                let flat: Vec<f64> = tr.populations.iter().flatten().copied().collect();
                bundle.write("populations.txt", &matrix_text(&rows, &cols, &flat))?;
                report.absorb(Some(&run.invariants));
                report.ringdown = Some(run);
            }
        }
    }

    if a.scan {
        let outcome = run_2d_experiment(&config.system()?, &pair, &config.experiment()?)?;
        bundle.write("scan.txt", &outcome.scan.to_text())?;
        report.absorb(outcome.invariants.as_ref());
        if a.spectrum || a.catalog_order > 0 || !a.cuts.is_empty() || a.stats_samples > 0 {
            let spectrum = spectrum_2d(&outcome.scan, &config.spectrum_config())?;
            bundle.write("spectrum.txt", &spectrum.to_text())?;
            for c in &a.cuts {
                let line = parse_cut(c)?;
                let data = cut(&spectrum, line)?;
                bundle.write(&format!("{}.csv", cut_name(line)), &data.to_csv())?;
            }
            report.spectrum = Some(spectrum);
        }
        if a.stats_samples > 0 {
            report.stats = Some(write_stats(config, bundle, &outcome)?);
        }
        report.scan = Some(outcome);
    }
    if a.catalog_order > 0 {
        let spectrum = report.spectrum.clone();
        write_catalog(config, bundle, report, spectrum.as_ref())?;
    }

    if a.switchoff {
        let ledger = switch_off_cases(config, &pair, bundle)?;
        for c in &ledger.cases {
            report.absorb(c.invariants.as_ref());
        }
        bundle.write("switchoff.csv", &ledger.to_csv())?;
        report.switchoff = Some(ledger);
    }
    Ok(())
}

fn write_catalog(
    config: &ScenarioConfig,
    bundle: &mut Bundle,
    report: &mut ScenarioReport,
    spectrum: Option<&Spectrum2D>,
) -> Result<()> {
    let catalog = enumerate_mixing_peaks(
        &report.polaritons,
        config.analysis.catalog_order,
        &[Field::A, Field::B],
    )?;
    bundle.write("catalog.csv", &catalog_csv(&catalog))?;
    let Some(spectrum) = spectrum else {
        return Ok(());
    };
    let c = classify_peaks(spectrum, &catalog, config.analysis.peak_threshold, None)?;
    let mut csv = String::from("nu_t,nu_tau,amplitude,type,catalog_nu_t,catalog_nu_tau,composition\n");
    for m in &c.matches {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_sig9(m.maximum.nu_t),
            fmt_sig9(m.maximum.nu_tau),
            fmt_sig9(m.maximum.amplitude),
            m.peak.label(),
            fmt_sig9(m.peak.nu_t),
            fmt_sig9(m.peak.nu_tau),
            m.peak.composition_text()
        ));
    }
    for m in &c.unmatched {
        csv.push_str(&format!(
            "{},{},{},unmatched,,,\n",
            fmt_sig9(m.nu_t),
            fmt_sig9(m.nu_tau),
            fmt_sig9(m.amplitude)
        ));
    }
    bundle.write("peaks.csv", &csv)?;
    report.classification = Some(c);
    Ok(())
}

fn write_stats(config: &ScenarioConfig, bundle: &mut Bundle, outcome: &ScanOutcome) -> Result<EnsembleStats> {
    let sigma = config.analysis.noise_fraction * outcome.scan.peak_abs();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let spectra = (0..config.analysis.stats_samples)
        .map(|_| {
            let noisy = add_noise(&outcome.scan, sigma, &mut rng)?;
            let mut s = spectrum_2d(&noisy, &config.spectrum_config())?;
            let norm = s.normalization;
            s.amplitude.iter_mut().for_each(|v| *v *= norm);
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    let stats = ensemble_stats(&spectra)?;
    let s0 = &spectra[0];
    bundle.write("stats_mean.txt", &matrix_text(&s0.nu_tau, &s0.nu_t, &stats.mean))?;
    bundle.write(
        "stats_std_error.txt",
        &matrix_text(&s0.nu_tau, &s0.nu_t, &stats.std_error),
    )?;
    bundle.write(
        "stats.csv",
        &format!(
            "samples,noise_sigma_kV_per_cm,seed,normalized_error\n{},{},{},{}\n",
            stats.n,
            fmt_sig9(sigma),
            config.seed,
            fmt_sig9(stats.normalized_error)
        ),
    )?;
    Ok(stats)
}

/// `|E(ν)|` of the incident and emitted fields and their ratio, 0–3 THz.
fn transmission_csv(incident: &Waveform, emitted: &Waveform) -> String {
    let n = (8 * incident.len()).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let spectrum = |w: &Waveform| {
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (b, v) in buf.iter_mut().zip(&w.samples) {
            *b = Complex64::new(*v * w.dt, 0.0);
        }
        fft.process(&mut buf);
        buf
    };
    let si = spectrum(incident);
    let se = spectrum(emitted);
    let dnu = 1.0 / (n as f64 * incident.dt);
    let mut out = String::from("nu_THz,incident,emitted,transmission\n");
    let peak = si.iter().take(n / 2).fold(0.0f64, |m, c| m.max(c.norm()));
    for k in 0..n / 2 {
        let nu = k as f64 * dnu;
        if nu > 3.0 {
            break;
        }
        let (i, e) = (si[k].norm(), se[k].norm());
        let t = if i > 1e-6 * peak { e / i } else { 0.0 };
        out.push_str(&format!("{},{},{},{}\n", fmt_sig9(nu), fmt_sig9(i), fmt_sig9(e), fmt_sig9(t)));
    }
    out
}

fn write_manifest(
    config: &ScenarioConfig,
    bundle: &Bundle,
    report: &ScenarioReport,
    error: Option<&Error>,
) -> Result<()> {
    let mut doc = toml::Table::new();
    doc.insert("scenario".into(), config.scenario.clone().into());
    doc.insert("status".into(), if error.is_some() { "error" } else { "ok" }.into());
    if let Some(e) = error {
        doc.insert("error".into(), e.to_string().into());
    }
    let files: Vec<toml::Value> = bundle
        .files
        .iter()
        .map(|f| {
            let mut t = toml::Table::new();
            t.insert("name".into(), f.name.clone().into());
            t.insert("sha256".into(), f.sha256.clone().into());
            t.insert("bytes".into(), (f.bytes as i64).into());
            toml::Value::Table(t)
        })
        .collect();
    if let Some(inv) = &report.invariants {
        let mut t = toml::Table::new();
        t.insert("hermiticity".into(), inv.hermiticity.into());
        t.insert("trace_drift_per_ps".into(), inv.trace_drift_per_ps.into());
        t.insert("top_population".into(), inv.top_population.into());
        t.insert("population_excursion".into(), inv.population_excursion.into());
        t.insert("max_outside_window".into(), inv.max_outside_window.into());
        t.insert(
            "warnings".into(),
            toml::Value::Array(inv.warnings.iter().map(|w| w.clone().into()).collect()),
        );
        doc.insert("invariants".into(), toml::Value::Table(t));
    }
    let resolved = toml::Table::try_from(config).map_err(|e| Error::Config {
        field: "<manifest>".into(),
        reason: e.to_string(),
    })?;
    doc.insert("config".into(), toml::Value::Table(resolved));
    doc.insert("files".into(), toml::Value::Array(files));
    let text = toml::to_string(&doc).expect("manifest serializes");
    let path = bundle.dir.join("manifest.toml");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}
