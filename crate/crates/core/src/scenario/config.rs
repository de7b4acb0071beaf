//! Scenario configuration files.
//!
//! A config is a TOML document of flat sections. `scenario` selects a shipped
//! preset; every other key overrides the preset value of the same name.
//!
//! ```toml
//! scenario = "fig3-spectrum"
//! workers = 4
//!
//! [pulses]
//! amp_b_kv_cm = 5.6
//!
//! [analysis]
//! cuts = ["nu_tau=0", "diagonal"]
//! ```
//!
//! Sections: top level (`scenario`, `system`, `output_dir`, `workers`,
//! `seed`), `[landau]`, `[cavity]`, `[pulses]`, `[delays]`, `[analysis]`.
//! Frequencies are ordinary frequencies in THz and times in ps, as the key
//! suffixes say. Relative pulse file paths resolve against the config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bosonic::{BosonicParams, CavityMode};
use crate::error::{Error, Result};
use crate::hopfield::{normal_mode_frequencies, SweepTemplate, DEGENERATE_NU_C};
use crate::landau::{DipoleReference, ExcitationMeasure, LandauParams, LevelSpectrum};
use crate::pulses::{load_waveform, synth_single_cycle, PulsePair, SingleCycle, TimeGrid, Waveform};
use crate::spectroscopy::{CutLine, ExperimentConfig, SpectrumConfig, System};
use crate::units::{angular_to_thz, thz_to_angular};

pub const SCENARIO_IDS: [&str; 9] = [
    "fig1b-anticrossing",
    "fig2c-scan",
    "fig3-spectrum",
    "fig4-full",
    "s5-nu-c-zero",
    "s9-highfield",
    "s13-switchoff",
    "single-qw",
    "custom",
];

/// Drive scale reaching 6.95e11 cm⁻² Landau excitations with the default
/// pulse pair at zero delay (see `calibrate`).
pub const CALIBRATED_DRIVE_SCALE: f64 = 1.856_617_647;

/// Cyclotron frequency (THz) of the Fermi-level transition at 2.3 T, where the
/// effective cavity couplings are specified.
const NU_C_REFERENCE: f64 = 0.868;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    Bosonic,
    Landau,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelSpectrumKey {
    NonParabolic,
    Parabolic,
    FermiMatched,
}

impl From<LevelSpectrumKey> for LevelSpectrum {
    fn from(k: LevelSpectrumKey) -> Self {
        match k {
            LevelSpectrumKey::NonParabolic => LevelSpectrum::NonParabolic,
            LevelSpectrumKey::Parabolic => LevelSpectrum::Parabolic,
            LevelSpectrumKey::FermiMatched => LevelSpectrum::FermiMatched,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandauSection {
    pub n_levels: usize,
    pub b_field_t: f64,
    pub m_eff: f64,
    pub nu_np_thz: f64,
    pub filling: f64,
    pub u_e: f64,
    pub u_d: f64,
    pub level_spectrum: LevelSpectrumKey,
    pub t2_base_ps: f64,
    pub t2_phonon_ps: f64,
    pub t1_ps: f64,
    pub e_lo_mev: f64,
    pub phonon_window: bool,
    /// `"signed"` or `"absolute"`.
    pub excitation_measure: String,
    /// `"filling"` or `"fermi-transition"`.
    pub dipole_reference: String,
    /// Coherence band width; 0 keeps the full matrix.
    pub coherence_band: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub nu_lc_thz: f64,
    pub gamma_lc_thz: f64,
    pub kappa_lc: f64,
    pub rabi_lc_thz: f64,
    pub nu_dp_thz: f64,
    pub gamma_dp_thz: f64,
    pub kappa_dp: f64,
    pub rabi_dp_thz: f64,
    /// Cyclotron frequency of the bosonic model; the density-matrix model
    /// takes it from the Landau ladder.
    pub nu_c_thz: f64,
    pub gamma_matter_thz: f64,
    pub drive_scale: f64,
    /// Far-field to near-field amplitude factor applied to both pulses.
    pub near_field_factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    pub center_thz: f64,
    pub fwhm_ps: f64,
    pub amp_a_kv_cm: f64,
    pub amp_b_kv_cm: f64,
    pub cep_rad: f64,
    pub dt_ps: f64,
    pub t_start_ps: f64,
    pub t_stop_ps: f64,
    /// Measured waveforms replacing the synthesized ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file_a: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file_b: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelaySection {
    pub tau_start_ps: f64,
    pub tau_stop_ps: f64,
    pub tau_step_ps: f64,
    pub window_start_ps: f64,
    pub window_stop_ps: f64,
    pub window_step_ps: f64,
    pub exact_single_pulse_runs: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Hopfield anti-crossing sweep.
    pub sweep: bool,
    pub sweep_cavity_thz: f64,
    pub sweep_coupling_ratio: f64,
    pub sweep_reference_thz: f64,
    pub sweep_start_thz: f64,
    pub sweep_stop_thz: f64,
    pub sweep_step_thz: f64,
    /// Pulse A alone: emitted field and transmission.
    pub linear: bool,
    /// A+B at `ringdown_tau_ps` with all observables.
    pub ringdown: bool,
    pub ringdown_tau_ps: f64,
    pub population_stride: usize,
    pub scan: bool,
    pub spectrum: bool,
    pub taper_fraction: f64,
    pub padding: usize,
    /// `"nu_tau=<THz>"`, `"nu_t=<THz>"` or `"diagonal"`.
    pub cuts: Vec<String>,
    /// Wave-mixing order of the peak catalog; 0 skips it.
    pub catalog_order: usize,
    /// Relative amplitude below which maxima are not classified.
    pub peak_threshold: f64,
    /// Noisy copies of the scan for ensemble statistics; 0 skips them.
    pub stats_samples: usize,
    /// Noise standard deviation relative to the scan's peak `|E_nl|`.
    pub noise_fraction: f64,
    pub switchoff: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub system: SystemKind,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
    pub seed: u64,
    pub landau: LandauSection,
    pub cavity: CavitySection,
    pub pulses: PulseSection,
    pub delays: DelaySection,
    pub analysis: AnalysisSection,
}

fn config_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn base() -> ScenarioConfig {
    let lp = LandauParams::default();
    let c = BosonicParams::default();
    ScenarioConfig {
        scenario: "custom".into(),
        system: SystemKind::Landau,
        output_dir: PathBuf::from("out"),
        workers: 0,
        seed: 0,
        landau: LandauSection {
            n_levels: lp.n_levels,
            b_field_t: lp.b_field,
            m_eff: lp.m_eff,
            nu_np_thz: angular_to_thz(lp.omega_np),
            filling: lp.filling,
            u_e: lp.u_e,
            u_d: lp.u_d,
            level_spectrum: LevelSpectrumKey::NonParabolic,
            t2_base_ps: lp.t2_base,
            t2_phonon_ps: lp.t2_phonon,
            t1_ps: lp.t1,
            e_lo_mev: lp.e_lo,
            phonon_window: lp.phonon_window,
            excitation_measure: "signed".into(),
            dipole_reference: "filling".into(),
            coherence_band: lp.coherence_band.unwrap_or(0),
        },
        cavity: CavitySection {
            nu_lc_thz: angular_to_thz(c.lc.omega),
            gamma_lc_thz: angular_to_thz(c.lc.gamma),
            kappa_lc: c.lc.kappa,
            rabi_lc_thz: angular_to_thz(c.lc.omega_rabi_vac),
            nu_dp_thz: angular_to_thz(c.dp.omega),
            gamma_dp_thz: angular_to_thz(c.dp.gamma),
            kappa_dp: c.dp.kappa,
            rabi_dp_thz: angular_to_thz(c.dp.omega_rabi_vac),
            nu_c_thz: angular_to_thz(c.omega_c),
            gamma_matter_thz: angular_to_thz(c.gamma_matter),
            drive_scale: CALIBRATED_DRIVE_SCALE,
            near_field_factor: 0.68,
        },
        pulses: PulseSection {
            center_thz: 1.0,
            fwhm_ps: 0.5,
            amp_a_kv_cm: 1.3,
            amp_b_kv_cm: 2.5,
            cep_rad: 0.0,
            dt_ps: 0.001,
            t_start_ps: -4.0,
            t_stop_ps: 8.0,
            file_a: None,
            file_b: None,
        },
        delays: DelaySection {
            tau_start_ps: -2.5,
            tau_stop_ps: 5.0,
            tau_step_ps: 0.05,
            window_start_ps: -2.0,
            window_stop_ps: 8.0,
            window_step_ps: 0.02,
            exact_single_pulse_runs: false,
        },
        analysis: AnalysisSection {
            sweep: false,
            sweep_cavity_thz: 0.81,
            sweep_coupling_ratio: 0.77,
            sweep_reference_thz: 0.84,
            sweep_start_thz: 0.0,
            sweep_stop_thz: 2.0,
            sweep_step_thz: 0.01,
            linear: false,
            ringdown: false,
            ringdown_tau_ps: 0.0,
            population_stride: 10,
            scan: false,
            spectrum: false,
            taper_fraction: 0.15,
            padding: 4,
            cuts: Vec::new(),
            catalog_order: 0,
            peak_threshold: 0.02,
            stats_samples: 0,
            noise_fraction: 0.0,
            switchoff: false,
        },
    }
}

impl ScenarioConfig {
    /// The shipped preset for `id`.
    pub fn preset(id: &str) -> Result<Self> {
        let mut c = base();
        c.scenario = id.to_string();
        c.output_dir = PathBuf::from("out").join(id);
        let standard_cuts = || {
            vec![
                "nu_tau=0".to_string(),
                "diagonal".to_string(),
                "nu_tau=1.3".to_string(),
                "nu_tau=1.6".to_string(),
            ]
        };
        match id {
            "fig1b-anticrossing" => {
                c.system = SystemKind::Bosonic;
                c.analysis.sweep = true;
            }
            "fig2c-scan" => {
                c.analysis.scan = true;
            }
            "fig3-spectrum" => {
                c.analysis.scan = true;
                c.analysis.spectrum = true;
                c.analysis.cuts = standard_cuts();
                c.analysis.catalog_order = 3;
            }
            "fig4-full" => {
                c.analysis.ringdown = true;
                c.analysis.scan = true;
                c.analysis.spectrum = true;
                c.analysis.cuts = standard_cuts();
                c.analysis.catalog_order = 3;
            }
            "s5-nu-c-zero" => {
                c.system = SystemKind::Bosonic;
                c.cavity.nu_c_thz = DEGENERATE_NU_C;
                let s = (DEGENERATE_NU_C / NU_C_REFERENCE).sqrt();
                c.cavity.rabi_lc_thz *= s;
                c.cavity.rabi_dp_thz *= s;
                c.analysis.linear = true;
            }
            "s9-highfield" => {
                c.pulses.amp_b_kv_cm = 5.6;
                c.analysis.scan = true;
                c.analysis.spectrum = true;
                c.analysis.cuts = standard_cuts();
                c.analysis.catalog_order = 3;
            }
            "s13-switchoff" => {
                c.analysis.switchoff = true;
            }
            "single-qw" => {
                c.system = SystemKind::Bosonic;
                c.cavity.nu_lc_thz = 0.81;
                c.cavity.nu_c_thz = 0.8;
                c.cavity.rabi_lc_thz = 0.15 * 0.8;
                c.cavity.rabi_dp_thz = 0.0;
                c.cavity.kappa_dp = 0.0;
                c.analysis.linear = true;
                c.analysis.catalog_order = 3;
            }
            "custom" => {
                c.analysis.scan = true;
            }
            other => {
                return Err(config_err(
                    "scenario",
                    format!("unknown scenario `{other}`; expected one of {}", SCENARIO_IDS.join(", ")),
                ))
            }
        }
        Ok(c)
    }

    /// Parses a config document: the preset named by `scenario` (default
    /// `custom`) with the document's keys laid over it.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| config_err("<document>", e.to_string()))?;
        let id = match doc.get("scenario") {
            None => "custom",
            Some(toml::Value::String(s)) => s.as_str(),
            Some(_) => return Err(config_err("scenario", "must be a string")),
        };
        let preset = Self::preset(id)?;
        let preset_table = toml::Table::try_from(&preset)
            .map_err(|e| config_err("<preset>", e.to_string()))?;
        let mut merged = preset_table.clone();
        for (key, value) in doc.clone() {
            match (merged.get_mut(&key), value) {
                (Some(toml::Value::Table(section)), toml::Value::Table(over)) => {
                    for (k, v) in over {
                        if !section.contains_key(&k) && !matches!(k.as_str(), "file_a" | "file_b") {
                            return Err(config_err(
                                &format!("{key}.{k}"),
                                "unknown key",
                            ));
                        }
                        section.insert(k, v);
                    }
                }
                (Some(toml::Value::Table(_)), _) => {
                    return Err(config_err(&key, "expected a section"));
                }
                (Some(_), toml::Value::Table(_)) => {
                    return Err(config_err(&key, "expected a value, found a section"));
                }
                (Some(slot), v) => *slot = v,
                (None, _) => return Err(config_err(&key, "unknown key")),
            }
        }
        let mut config: Self = match toml::Value::Table(merged).try_into() {
            Ok(c) => c,
            Err(e) => return Err(locate_type_error(&preset_table, &doc, e)),
        };
        for f in [&mut config.pulses.file_a, &mut config.pulses.file_b].into_iter().flatten() {
            if f.is_relative() {
                *f = base_dir.join(&*f);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, dir)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !SCENARIO_IDS.contains(&self.scenario.as_str()) {
            return Err(config_err("scenario", format!("unknown scenario `{}`", self.scenario)));
        }
        for (name, f) in [("pulses.file_a", &self.pulses.file_a), ("pulses.file_b", &self.pulses.file_b)] {
            if let Some(f) = f {
                if !f.is_file() {
                    return Err(config_err(name, format!("{} does not exist", f.display())));
                }
            }
        }
        let positive = [
            ("pulses.dt_ps", self.pulses.dt_ps),
            ("pulses.fwhm_ps", self.pulses.fwhm_ps),
            ("pulses.center_thz", self.pulses.center_thz),
            ("delays.tau_step_ps", self.delays.tau_step_ps),
            ("delays.window_step_ps", self.delays.window_step_ps),
            ("cavity.near_field_factor", self.cavity.near_field_factor),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(config_err(name, "must be finite and > 0"));
            }
        }
        if self.pulses.amp_a_kv_cm < 0.0 || self.pulses.amp_b_kv_cm < 0.0 {
            return Err(config_err("pulses.amp", "amplitudes must be >= 0"));
        }
        if !matches!(self.analysis.catalog_order, 0 | 3 | 5 | 7) {
            return Err(config_err("analysis.catalog_order", "must be 0, 3, 5 or 7"));
        }
        if !(0.0..1.0).contains(&self.analysis.peak_threshold) {
            return Err(config_err("analysis.peak_threshold", "must lie in [0, 1)"));
        }
        if self.analysis.stats_samples == 1 {
            return Err(config_err("analysis.stats_samples", "needs 0 or at least 2"));
        }
        if self.analysis.noise_fraction < 0.0 {
            return Err(config_err("analysis.noise_fraction", "must be >= 0"));
        }
        if self.analysis.population_stride == 0 {
            return Err(config_err("analysis.population_stride", "must be >= 1"));
        }
        if self.analysis.switchoff && self.system != SystemKind::Landau {
            return Err(config_err("analysis.switchoff", "needs system = \"landau\""));
        }
        for c in &self.analysis.cuts {
            parse_cut(c)?;
        }
        self.landau_params()?.validate().map_err(|e| as_config(e, "landau"))?;
        self.bosonic_params().validate().map_err(|e| as_config(e, "cavity"))?;
        Ok(())
    }

    pub fn bosonic_params(&self) -> BosonicParams {
        let c = &self.cavity;
        BosonicParams {
            lc: CavityMode {
                omega: thz_to_angular(c.nu_lc_thz),
                gamma: thz_to_angular(c.gamma_lc_thz),
                kappa: c.kappa_lc,
                omega_rabi_vac: thz_to_angular(c.rabi_lc_thz),
            },
            dp: CavityMode {
                omega: thz_to_angular(c.nu_dp_thz),
                gamma: thz_to_angular(c.gamma_dp_thz),
                kappa: c.kappa_dp,
                omega_rabi_vac: thz_to_angular(c.rabi_dp_thz),
            },
            omega_c: thz_to_angular(c.nu_c_thz),
            gamma_matter: thz_to_angular(c.gamma_matter_thz),
            drive_scale: c.drive_scale,
        }
    }

    pub fn landau_params(&self) -> Result<LandauParams> {
        let l = &self.landau;
        let excitation_measure = match l.excitation_measure.as_str() {
            "signed" => ExcitationMeasure::Signed,
            "absolute" => ExcitationMeasure::Absolute,
            other => {
                return Err(config_err(
                    "landau.excitation_measure",
                    format!("`{other}`: expected \"signed\" or \"absolute\""),
                ))
            }
        };
        let dipole_reference = match l.dipole_reference.as_str() {
            "filling" => DipoleReference::Filling,
            "fermi-transition" => DipoleReference::FermiTransition,
            other => {
                return Err(config_err(
                    "landau.dipole_reference",
                    format!("`{other}`: expected \"filling\" or \"fermi-transition\""),
                ))
            }
        };
        Ok(LandauParams {
            n_levels: l.n_levels,
            b_field: l.b_field_t,
            m_eff: l.m_eff,
            omega_np: thz_to_angular(l.nu_np_thz),
            filling: l.filling,
            u_e: l.u_e,
            u_d: l.u_d,
            level_spectrum: l.level_spectrum.into(),
            t2_base: l.t2_base_ps,
            t2_phonon: l.t2_phonon_ps,
            t1: l.t1_ps,
            e_lo: l.e_lo_mev,
            phonon_window: l.phonon_window,
            excitation_measure,
            dipole_reference,
            coherence_band: (l.coherence_band > 0).then_some(l.coherence_band),
            cavity: self.bosonic_params(),
        })
    }

    pub fn system(&self) -> Result<System> {
        Ok(match self.system {
            SystemKind::Bosonic => System::Bosonic(self.bosonic_params()),
            SystemKind::Landau => System::Landau(self.landau_params()?),
        })
    }

    /// Linearized cavity seen by the pulses: the bosonic parameters, or the
    /// density-matrix cavity with its Fermi-level cyclotron frequency.
    pub fn effective_cavity(&self) -> Result<BosonicParams> {
        Ok(match self.system {
            SystemKind::Bosonic => self.bosonic_params(),
            SystemKind::Landau => self.landau_params()?.effective_cavity(),
        })
    }

    /// Normal-mode frequencies (THz) of the modes that couple to the
    /// cyclotron resonance.
    pub fn polaritons(&self) -> Result<Vec<f64>> {
        let p = self.effective_cavity()?;
        let modes: Vec<(f64, f64)> = p
            .modes()
            .iter()
            .filter(|m| m.omega_rabi_vac > 0.0)
            .map(|m| (m.omega, m.omega_rabi_vac))
            .collect();
        normal_mode_frequencies(&modes, p.omega_c)
    }

    pub fn pulse_grid(&self) -> Result<TimeGrid> {
        TimeGrid::spanning(self.pulses.t_start_ps, self.pulses.t_stop_ps, self.pulses.dt_ps)
    }

    /// The two incident pulses as seen by the sample (near-field scaled).
    pub fn pulse_pair(&self) -> Result<PulsePair> {
        let grid = self.pulse_grid()?;
        let p = &self.pulses;
        let make = |file: &Option<PathBuf>, amp: f64| -> Result<Waveform> {
            let w = match file {
                Some(path) => load_waveform(path)?.on_grid(grid)?,
                None => {
                    let mut s = SingleCycle::new(p.center_thz, p.fwhm_ps, amp);
                    s.cep = p.cep_rad;
                    synth_single_cycle(&s, grid)?
                }
            };
            Ok(w.scaled(self.cavity.near_field_factor))
        };
        Ok(PulsePair {
            pulse_a: make(&p.file_a, p.amp_a_kv_cm)?,
            pulse_b: make(&p.file_b, p.amp_b_kv_cm)?,
            tau: 0.0,
        })
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let d = &self.delays;
        Ok(ExperimentConfig {
            taus: ExperimentConfig::delay_grid(d.tau_start_ps, d.tau_stop_ps, d.tau_step_ps)?,
            window: TimeGrid::spanning(d.window_start_ps, d.window_stop_ps, d.window_step_ps)?,
            workers: self.workers,
            exact_single_pulse_runs: d.exact_single_pulse_runs,
        })
    }

    pub fn spectrum_config(&self) -> SpectrumConfig {
        SpectrumConfig {
            taper_fraction: self.analysis.taper_fraction,
            padding: self.analysis.padding,
            keep_complex: false,
        }
    }

    pub fn sweep_template(&self) -> SweepTemplate {
        SweepTemplate {
            nu_cavity: self.analysis.sweep_cavity_thz,
            coupling_ratio: self.analysis.sweep_coupling_ratio,
            nu_reference: self.analysis.sweep_reference_thz,
        }
    }
}

/// Re-applies the overrides one at a time to find the key whose value does
/// not type-check.
fn locate_type_error(preset: &toml::Table, doc: &toml::Table, e: toml::de::Error) -> Error {
    let fails = |table: toml::Table| toml::Value::Table(table).try_into::<ScenarioConfig>().err();
    for (key, value) in doc {
        match value {
            toml::Value::Table(over) => {
                for (k, v) in over {
                    let mut t = preset.clone();
                    if let Some(toml::Value::Table(section)) = t.get_mut(key) {
                        section.insert(k.clone(), v.clone());
                    }
                    if let Some(err) = fails(t) {
                        return config_err(&format!("{key}.{k}"), err.message());
                    }
                }
            }
            v => {
                let mut t = preset.clone();
                t.insert(key.clone(), v.clone());
                if let Some(err) = fails(t) {
                    return config_err(key, err.message());
                }
            }
        }
    }
    config_err("<document>", e.message())
}

fn as_config(e: Error, section: &str) -> Error {
    let key = |f: &str| -> String {
        let k = match f {
            "b_field" => "b_field_t",
            "omega_np" => "nu_np_thz",
            "t2_base/t2_phonon/t1" => "t2_base_ps/t2_phonon_ps/t1_ps",
            "lc" => "nu_lc_thz/rabi_lc_thz",
            "dp" => "nu_dp_thz/rabi_dp_thz",
            "lc.gamma" => "gamma_lc_thz",
            "dp.gamma" => "gamma_dp_thz",
            "omega_c" => "nu_c_thz",
            "gamma_matter" => "gamma_matter_thz",
            other => other,
        };
        format!("{section}.{k}")
    };
    match e {
        Error::InvalidParameter { field, reason } => Error::Config {
            field: key(&field),
            reason,
        },
        other => other,
    }
}

/// Parses a cut directive.
pub fn parse_cut(text: &str) -> Result<CutLine> {
    let t = text.trim();
    if t == "diagonal" {
        return Ok(CutLine::Diagonal);
    }
    let bad = || config_err("analysis.cuts", format!("bad cut `{t}`"));
    let (axis, value) = t.split_once('=').ok_or_else(bad)?;
    let v: f64 = value.trim().parse().map_err(|_| bad())?;
    match axis.trim() {
        "nu_tau" => Ok(CutLine::NuTau(v)),
        "nu_t" => Ok(CutLine::NuT(v)),
        _ => Err(bad()),
    }
}

/// File-name stem of a cut.
pub fn cut_name(line: CutLine) -> String {
    match line {
        CutLine::Diagonal => "cut_diagonal".into(),
        CutLine::NuTau(v) => format!("cut_nu_tau_{v}"),
        CutLine::NuT(v) => format!("cut_nu_t_{v}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates_and_round_trips() {
        for id in SCENARIO_IDS {
            let c = ScenarioConfig::preset(id).unwrap();
            c.validate().unwrap();
            let back = ScenarioConfig::parse(&c.to_toml(), Path::new(".")).unwrap();
            assert_eq!(back, c, "{id}");
        }
    }

    #[test]
    fn overrides_apply_on_top_of_the_preset() {
        let text = "scenario = \"s9-highfield\"\nworkers = 3\n[landau]\nu_e = 0.0\n[analysis]\ncuts = [\"nu_t=0.45\"]\n";
        let c = ScenarioConfig::parse(text, Path::new(".")).unwrap();
        assert_eq!(c.pulses.amp_b_kv_cm, 5.6);
        assert_eq!(c.workers, 3);
        assert_eq!(c.landau.u_e, 0.0);
        assert_eq!(c.landau.u_d, 0.064);
        assert_eq!(parse_cut(&c.analysis.cuts[0]).unwrap(), CutLine::NuT(0.45));
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            ("scenario = \"fig9\"", "scenario"),
            ("[landau]\nu_x = 1.0", "landau.u_x"),
            ("bogus = 1", "bogus"),
            ("[pulses]\ndt_ps = -1.0", "pulses.dt_ps"),
            ("[landau]\nn_levels = \"many\"", "n_levels"),
            ("[analysis]\ncuts = [\"sideways\"]", "analysis.cuts"),
            ("[pulses]\nfile_a = \"no/such/file.txt\"", "pulses.file_a"),
            ("[landau]\nexcitation_measure = \"odd\"", "landau.excitation_measure"),
        ];
        for (text, field) in cases {
            let e = ScenarioConfig::parse(text, Path::new(".")).unwrap_err();
            assert!(matches!(e, Error::Config { .. }), "{text}: {e}");
            assert!(e.to_string().contains(field), "{text}: {e}");
        }
    }

    #[test]
    fn preset_polaritons() {
        let full = ScenarioConfig::preset("fig4-full").unwrap().polaritons().unwrap();
        assert_eq!(full.len(), 3);
        let qw = ScenarioConfig::preset("single-qw").unwrap().polaritons().unwrap();
        assert_eq!(qw.len(), 2);
        assert!((qw[0] - 0.7).abs() < 0.05 && (qw[1] - 0.95).abs() < 0.05, "{qw:?}");
    }

    #[test]
    fn near_field_factor_scales_the_pulses() {
        let c = ScenarioConfig::preset("fig3-spectrum").unwrap();
        let p = c.pulse_pair().unwrap();
        assert!((p.pulse_b.peak_abs() - 0.68 * 2.5).abs() < 1e-3 * 2.5);
    }
}
