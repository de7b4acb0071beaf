//! Config-driven scenarios: presets, the batch runner, drive calibration and
//! the switch-off analysis.

mod calibrate;
mod config;
mod run;
mod switchoff;

pub use calibrate::{calibrate_drive, peak_excitation, Calibration};
pub use config::{
    cut_name, parse_cut, AnalysisSection, CavitySection, DelaySection, LandauSection,
    LevelSpectrumKey, PulseSection, ScenarioConfig, SystemKind, CALIBRATED_DRIVE_SCALE,
    SCENARIO_IDS,
};
pub use run::{run_scenario, FileDigest, ScenarioReport};
pub use switchoff::{switch_off_variants, SwitchOffCase, SwitchOffLedger, WEIGHT_SPLIT_THZ};
