use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use polariton_core::pulses::{schedule, Combination};
use polariton_core::scenario::{calibrate_drive, run_scenario, ScenarioConfig, SystemKind};
use polariton_core::spectroscopy::{
    add_noise, catalog_csv, ensemble_stats, enumerate_mixing_peaks, local_maxima, spectrum_2d,
    Field, Scan2D, SpectrumConfig,
};
use polariton_core::Error;

#[derive(Parser)]
#[command(name = "polariton", version, about = "Cavity / Landau-electron polariton simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for synthetic noise.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write its result bundle.
    Run { config: PathBuf },
    /// Run the switch-off analysis for a density-matrix config.
    Switchoff { config: PathBuf },
    /// Find the drive scale reaching a Landau excitation density (cm^-2).
    Calibrate {
        config: PathBuf,
        #[arg(long)]
        target_density: f64,
        /// Relative tolerance on the density.
        #[arg(long, default_value_t = 0.01)]
        tolerance: f64,
    },
    /// List wave-mixing peak positions for a set of polariton frequencies.
    Catalog {
        /// Comma-separated frequencies (THz).
        #[arg(long, value_delimiter = ',', required = true)]
        freqs: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        order: usize,
    },
    /// 2D amplitude spectrum of a scan file.
    Spectrum {
        scan: PathBuf,
        #[arg(long, default_value_t = 0.15)]
        taper: f64,
        #[arg(long, default_value_t = 4)]
        padding: usize,
    },
    /// Ensemble statistics of the spectra of several scans, or of noisy
    /// copies of one scan.
    Stats {
        #[arg(required = true)]
        scans: Vec<PathBuf>,
        /// Noisy copies to draw when a single scan is given.
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Noise standard deviation relative to the scan peak.
        #[arg(long)]
        noise_fraction: Option<f64>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 4,
        Error::DelayPoint { source, .. } | Error::SweepPoint { source, .. } => exit_code(source),
        Error::Diverged { .. }
        | Error::HermiticityDrift { .. }
        | Error::Eigen(_)
        | Error::Calibration(_)
        | Error::Analysis(_) => 3,
        _ => 2,
    }
}

fn load_config(path: &Path, g: &Global) -> polariton_core::Result<ScenarioConfig> {
    let mut c = ScenarioConfig::load(path)?;
    if let Some(w) = g.workers {
        c.workers = w;
    }
    if let Some(o) = &g.out {
        c.output_dir = o.clone();
    }
    if let Some(s) = g.seed {
        c.seed = s;
    }
    Ok(c)
}

fn write(path: &Path, text: &str) -> polariton_core::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn out_path(g: &Global, fallback: &Path, name: &str) -> PathBuf {
    match &g.out {
        Some(dir) => dir.join(name),
        None => fallback.with_file_name(name),
    }
}

fn run(cli: &Cli) -> polariton_core::Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Run { config } => {
            let c = load_config(config, g)?;
            let report = run_scenario(&c)?;
            println!("scenario {} -> {}", c.scenario, report.dir.display());
            for f in &report.files {
                println!("  {} {}", &f.sha256[..12], f.name);
            }
            if let Some(inv) = &report.invariants {
                println!(
                    "invariants: hermiticity {:e}, trace drift {:e}/ps, top population {:e}",
                    inv.hermiticity, inv.trace_drift_per_ps, inv.top_population
                );
            }
        }
        Command::Switchoff { config } => {
            let mut c = load_config(config, g)?;
            c.analysis.switchoff = true;
            c.analysis.scan = false;
            c.analysis.ringdown = false;
            c.analysis.linear = false;
            let report = run_scenario(&c)?;
            let ledger = report.switchoff.expect("switch-off ledger");
            print!("{}", ledger.to_csv());
        }
        Command::Calibrate {
            config,
            target_density,
            tolerance,
        } => {
            let c = load_config(config, g)?;
            if c.system != SystemKind::Landau {
                return Err(Error::Config {
                    field: "system".into(),
                    reason: "calibration needs the density-matrix system".into(),
                });
            }
            let params = c.landau_params()?;
            let probe = schedule(&c.pulse_pair()?, Combination::AB)?;
            let cal = calibrate_drive(&params, *target_density, &probe, *tolerance)?;
            let text = format!(
                "drive_scale = {}\nachieved_density_cm2 = {:e}\npeak_rho_exc = {}\n",
                cal.drive_scale, cal.achieved_density, cal.peak_rho_exc
            );
            print!("{text}");
            if let Some(dir) = &g.out {
                write(&dir.join("calibration.toml"), &text)?;
            }
        }
        Command::Catalog { freqs, order } => {
            let peaks = enumerate_mixing_peaks(freqs, *order, &[Field::A, Field::B])?;
            let csv = catalog_csv(&peaks);
            match &g.out {
                Some(dir) => write(&dir.join("catalog.csv"), &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Spectrum {
            scan,
            taper,
            padding,
        } => {
            let s = Scan2D::load(scan)?;
            let config = SpectrumConfig {
                taper_fraction: *taper,
                padding: *padding,
                keep_complex: false,
            };
            let spec = spectrum_2d(&s, &config)?;
            let stem = scan.file_stem().and_then(|x| x.to_str()).unwrap_or("scan");
            let path = out_path(g, scan, &format!("{stem}_spectrum.txt"));
            write(&path, &spec.to_text())?;
            println!("wrote {} (peak |A| = {:e})", path.display(), spec.normalization);
            println!("nu_t_THz nu_tau_THz amplitude");
            for m in local_maxima(&spec, 0.05).iter().take(20) {
                println!("{:.4} {:.4} {:.4}", m.nu_t, m.nu_tau, m.amplitude);
            }
        }
        Command::Stats {
            scans,
            samples,
            noise_fraction,
        } => {
            let loaded = scans.iter().map(Scan2D::load).collect::<polariton_core::Result<Vec<_>>>()?;
            let members = match (loaded.len(), noise_fraction) {
                (1, Some(f)) => {
                    let sigma = f * loaded[0].peak_abs();
                    let mut rng = ChaCha8Rng::seed_from_u64(g.seed.unwrap_or(0));
                    (0..*samples)
                        .map(|_| add_noise(&loaded[0], sigma, &mut rng))
                        .collect::<polariton_core::Result<Vec<_>>>()?
                }
                (_, Some(_)) => {
                    return Err(Error::Config {
                        field: "noise-fraction".into(),
                        reason: "applies to a single scan".into(),
                    })
                }
                _ => loaded,
            };
            let spectra = members
                .iter()
                .map(|s| {
                    let mut sp = spectrum_2d(s, &SpectrumConfig::default())?;
                    let norm = sp.normalization;
                    sp.amplitude.iter_mut().for_each(|v| *v *= norm);
                    Ok(sp)
                })
                .collect::<polariton_core::Result<Vec<_>>>()?;
            let st = ensemble_stats(&spectra)?;
            println!("samples {}", st.n);
            println!("normalized_error {}", st.normalized_error);
            if let Some(dir) = &g.out {
                let mut csv = String::from("samples,normalized_error\n");
                csv.push_str(&format!("{},{}\n", st.n, st.normalized_error));
                write(&dir.join("stats.csv"), &csv)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
