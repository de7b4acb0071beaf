use crate::error::Result;
use crate::landau::InvariantReport;
use crate::pulses::PulsePair;
use crate::spectroscopy::{run_2d_experiment, spectral_weight_split, spectrum_2d, System};
use crate::units::fmt_sig9;

use super::config::{LevelSpectrumKey, ScenarioConfig};
use super::run::Bundle;

/// Frequency (THz) separating the lower-polariton region from the upper
/// polaritons.
pub const WEIGHT_SPLIT_THZ: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SwitchOffCase {
    pub name: &'static str,
    pub u_e: f64,
    pub u_d: f64,
    pub level_spectrum: LevelSpectrumKey,
    /// Peak of the unnormalized `|A_nl|`.
    pub peak_amplitude: f64,
    /// Spectral energy at `ν_t ≤ 1 THz` and above.
    pub weight_below: f64,
    pub weight_above: f64,
    pub invariants: Option<InvariantReport>,
}

impl SwitchOffCase {
    pub fn fraction_above(&self) -> f64 {
        let total = self.weight_below + self.weight_above;
        if total > 0.0 {
            self.weight_above / total
        } else {
            0.0
        }
    }
}

/// The full model and the four reduced models, run with identical pulses
/// and grids.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitchOffLedger {
    pub cases: Vec<SwitchOffCase>,
}

impl SwitchOffLedger {
    pub fn case(&self, name: &str) -> Option<&SwitchOffCase> {
        self.cases.iter().find(|c| c.name == name)
    }

    /// Peak amplitude of `name` relative to the full model.
    pub fn ratio(&self, name: &str) -> Option<f64> {
        let full = self.case("full")?.peak_amplitude;
        let c = self.case(name)?.peak_amplitude;
        (full > 0.0).then(|| c / full)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "case,u_e,u_d,level_spectrum,peak_abs_A_nl,ratio_to_full,weight_below_1THz,weight_above_1THz,fraction_above\n",
        );
        for c in &self.cases {
            let ratio = self.ratio(c.name).map_or(String::new(), fmt_sig9);
            let spectrum = match c.level_spectrum {
                LevelSpectrumKey::NonParabolic => "non-parabolic",
                LevelSpectrumKey::Parabolic => "parabolic",
                LevelSpectrumKey::FermiMatched => "fermi-matched",
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                c.name,
                fmt_sig9(c.u_e),
                fmt_sig9(c.u_d),
                spectrum,
                fmt_sig9(c.peak_amplitude),
                ratio,
                fmt_sig9(c.weight_below),
                fmt_sig9(c.weight_above),
                fmt_sig9(c.fraction_above())
            ));
        }
        out
    }
}

/// Case names with the modification each applies to the base config.
pub fn switch_off_variants(base: &ScenarioConfig) -> Vec<(&'static str, ScenarioConfig)> {
    let variant = |f: &dyn Fn(&mut ScenarioConfig)| {
        let mut c = base.clone();
        f(&mut c);
        c
    };
    vec![
        ("full", base.clone()),
        ("no_coulomb", variant(&|c| {
            c.landau.u_e = 0.0;
            c.landau.u_d = 0.0;
        })),
        ("no_dipole_renorm", variant(&|c| c.landau.u_d = 0.0)),
        ("no_energy_renorm", variant(&|c| c.landau.u_e = 0.0)),
        ("equidistant", variant(&|c| c.landau.level_spectrum = LevelSpectrumKey::FermiMatched)),
    ]
}

pub(crate) fn switch_off_cases(
    base: &ScenarioConfig,
    pair: &PulsePair,
    bundle: &mut Bundle,
) -> Result<SwitchOffLedger> {
    let experiment = base.experiment()?;
    let mut cases = Vec::new();
    for (name, config) in switch_off_variants(base) {
        let system = System::Landau(config.landau_params()?);
        let outcome = run_2d_experiment(&system, pair, &experiment)?;
        let spectrum = spectrum_2d(&outcome.scan, &config.spectrum_config())?;
        bundle.write(&format!("{name}/scan.txt"), &outcome.scan.to_text())?;
        bundle.write(&format!("{name}/spectrum.txt"), &spectrum.to_text())?;
        let (weight_below, weight_above) = spectral_weight_split(&spectrum, WEIGHT_SPLIT_THZ);
        cases.push(SwitchOffCase {
            name,
            u_e: config.landau.u_e,
            u_d: config.landau.u_d,
            level_spectrum: config.landau.level_spectrum,
            peak_amplitude: spectrum.normalization,
            weight_below,
            weight_above,
            invariants: outcome.invariants,
        });
    }
    Ok(SwitchOffLedger { cases })
}
