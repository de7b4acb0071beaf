use rayon::prelude::*;

use crate::bosonic::{run_bosonic, BosonicParams};
use crate::error::{Error, Result};
use crate::landau::{run_landau, InvariantReport, LandauParams, RecordOptions};
use crate::pulses::{delay_steps, PulsePair, TimeGrid, Waveform};

use super::matrix::{Axis, Scan2D};

/// The system probed by the pulses.
#[derive(Clone, Debug, PartialEq)]
pub enum System {
    Bosonic(BosonicParams),
    Landau(LandauParams),
}

struct Response {
    emitted: Waveform,
    invariants: Option<InvariantReport>,
}

impl System {
    fn respond(&self, drive: &Waveform) -> Result<Response> {
        match self {
            System::Bosonic(p) => Ok(Response {
                emitted: run_bosonic(p, drive)?.emitted(),
                invariants: None,
            }),
            System::Landau(p) => {
                let run = run_landau(p, drive, RecordOptions::default())?;
                Ok(Response {
                    emitted: run.emitted,
                    invariants: Some(run.invariants),
                })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Delays of pulse B (ps), uniformly spaced and on the pulse grid.
    pub taus: Vec<f64>,
    /// Observation window; its spacing must be a whole multiple of the
    /// pulse spacing.
    pub window: TimeGrid,
    /// Worker threads for the delay rows; 0 uses all cores.
    pub workers: usize,
    /// Integrate pulse B alone for every delay instead of time-shifting the
    /// response at zero delay.
    pub exact_single_pulse_runs: bool,
}

impl ExperimentConfig {
    /// Uniform delay grid from `start` to `stop` inclusive.
    pub fn delay_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
        if !(step > 0.0) || stop < start {
            return Err(Error::invalid("tau grid", "needs step > 0 and stop >= start"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|k| start + k as f64 * step).collect())
    }
}

/// Result of a delay scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanOutcome {
    pub scan: Scan2D,
    /// Largest `|E_AB|` inside the window over all delays (kV/cm).
    pub reference_peak: f64,
    /// Worst invariant violations over all runs (density-matrix system only).
    pub invariants: Option<InvariantReport>,
}

fn merge(into: &mut Option<InvariantReport>, other: Option<InvariantReport>) {
    let Some(o) = other else { return };
    match into {
        None => *into = Some(o),
        Some(m) => m.absorb(&o),
    }
}

fn shifted(w: &Waveform, steps: i64, grid: TimeGrid) -> Result<Waveform> {
    Waveform {
        t0: w.t0 + steps as f64 * w.dt,
        dt: w.dt,
        samples: w.samples.clone(),
    }
    .on_grid(grid)
}

fn axis_from_taus(taus: &[f64], dt: f64) -> Result<Axis> {
    if taus.is_empty() {
        return Err(Error::invalid("taus", "delay grid is empty"));
    }
    let step = if taus.len() > 1 { taus[1] - taus[0] } else { dt };
    for w in taus.windows(2) {
        if ((w[1] - w[0]) - step).abs() > 1e-9 * step.abs().max(dt) || !(step > 0.0) {
            return Err(Error::invalid("taus", "delay grid must be uniform and increasing"));
        }
    }
    Axis::new("tau", "ps", taus[0], step, taus.len())
}

/// Runs A alone, B alone and A+B for every delay and returns
/// `E_nl = E_AB − E_A − E_B` sampled on the observation window.
pub fn run_2d_experiment(
    system: &System,
    pair: &PulsePair,
    config: &ExperimentConfig,
) -> Result<ScanOutcome> {
    let a = &pair.pulse_a;
    let b = &pair.pulse_b;
    let dt = a.dt;
    if (b.dt - dt).abs() > 1e-9 * dt {
        return Err(Error::GridMismatch(format!("pulse spacings {} and {}", a.dt, b.dt)));
    }
    let stride_f = config.window.dt / dt;
    let stride = stride_f.round() as usize;
    if stride == 0 || (stride_f - stride as f64).abs() > 1e-6 {
        return Err(Error::GridMismatch(format!(
            "window spacing {} is not a multiple of the pulse spacing {dt}",
            config.window.dt
        )));
    }
    let tau_axis = axis_from_taus(&config.taus, dt)?;
    let shifts: Vec<i64> = config
        .taus
        .iter()
        .map(|&tau| delay_steps(tau, dt))
        .collect::<Result<_>>()?;
    let smin = *shifts.iter().min().unwrap();
    let smax = *shifts.iter().max().unwrap();

    let start = config
        .window
        .t0
        .min(a.t0)
        .min(b.t0 + smin as f64 * dt);
    let end = config.window.end();
    let n = ((end - start) / dt).round() as usize + 1;
    let sim = TimeGrid::new(start, dt, n)?;
    let offset = ((config.window.t0 - start) / dt).round() as usize;

    let resp_a = system.respond(&shifted(a, 0, sim)?)?;
    let b_grid = TimeGrid::new(start - smax as f64 * dt, dt, n + (smax - smin) as usize)?;
    let resp_b0 = if config.exact_single_pulse_runs {
        None
    } else {
        Some(system.respond(&shifted(b, 0, b_grid)?)?)
    };

    let row = |(&tau, &s): (&f64, &i64)| -> Result<(Vec<f64>, f64, Option<InvariantReport>)> {
        let tag = |e: Error| Error::DelayPoint {
            tau,
            source: Box::new(e),
        };
        let wb = shifted(b, s, sim).map_err(tag)?;
        let wa = shifted(a, 0, sim).map_err(tag)?;
        let ab = Waveform {
            t0: sim.t0,
            dt,
            samples: wa.samples.iter().zip(&wb.samples).map(|(x, y)| x + y).collect(),
        };
        let resp_ab = system.respond(&ab).map_err(tag)?;
        let mut inv = resp_ab.invariants;
        let e_b: Vec<f64> = match &resp_b0 {
            Some(r0) => {
                let base = (smax - s) as usize;
                r0.emitted.samples[base..base + n].to_vec()
            }
            None => {
                let r = system.respond(&wb).map_err(tag)?;
                merge(&mut inv, r.invariants);
                r.emitted.samples
            }
        };
        let mut values = Vec::with_capacity(config.window.n);
        let mut peak = 0.0f64;
        for w in 0..config.window.n {
            let k = offset + w * stride;
            let e_ab = resp_ab.emitted.samples[k];
            peak = peak.max(e_ab.abs());
            values.push(e_ab - resp_a.emitted.samples[k] - e_b[k]);
        }
        Ok((values, peak, inv))
    };

    let rows: Vec<Result<_>> = if config.workers == 1 {
        config.taus.iter().zip(&shifts).map(row).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::invalid("workers", e.to_string()))?;
        pool.install(|| config.taus.par_iter().zip(&shifts).map(row).collect())
    };

    let mut values = Vec::with_capacity(config.taus.len() * config.window.n);
    let mut reference_peak = 0.0f64;
    let mut invariants = None;
    merge(&mut invariants, resp_a.invariants);
    if let Some(r) = resp_b0 {
        merge(&mut invariants, r.invariants);
    }
    for r in rows {
        let (v, peak, inv) = r?;
        values.extend(v);
        reference_peak = reference_peak.max(peak);
        merge(&mut invariants, inv);
    }
    let t_axis = Axis::new(
        "t",
        "ps",
        config.window.t0,
        config.window.dt,
        config.window.n,
    )?;
    Ok(ScanOutcome {
        scan: Scan2D::new(tau_axis, t_axis, values)?,
        reference_peak,
        invariants,
    })
}
