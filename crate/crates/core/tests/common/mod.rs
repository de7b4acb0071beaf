//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use polariton_core::spectroscopy::{Axis, Scan2D};

/// Driven, damped Kerr oscillator `x'' + 2γx' + ω₀²x + εx³ = E(t)`.
#[derive(Clone, Copy, Debug)]
pub struct Kerr {
    pub nu0: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl Kerr {
    /// Ringing frequency of the linear oscillator (THz).
    pub fn nu_damped(&self) -> f64 {
        let w0 = 2.0 * PI * self.nu0;
        (w0 * w0 - self.gamma * self.gamma).sqrt() / (2.0 * PI)
    }

    /// `x(t)` sampled every `stride` steps of a plain RK4 from `t0`.
    fn response(&self, drive: &dyn Fn(f64) -> f64, t0: f64, dt: f64, steps: usize, stride: usize) -> Vec<f64> {
        let w2 = (2.0 * PI * self.nu0).powi(2);
        let f = |t: f64, x: f64, v: f64| (v, drive(t) - 2.0 * self.gamma * v - w2 * x - self.epsilon * x * x * x);
        let (mut x, mut v) = (0.0, 0.0);
        let mut out = Vec::with_capacity(steps / stride + 1);
        for k in 0..=steps {
            if k % stride == 0 {
                out.push(x);
            }
            let t = t0 + k as f64 * dt;
            let (a1, b1) = f(t, x, v);
            let (a2, b2) = f(t + dt / 2.0, x + dt / 2.0 * a1, v + dt / 2.0 * b1);
            let (a3, b3) = f(t + dt / 2.0, x + dt / 2.0 * a2, v + dt / 2.0 * b2);
            let (a4, b4) = f(t + dt, x + dt * a3, v + dt * b3);
            x += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            v += dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        }
        out
    }

    /// `x_AB − x_A − x_B` for two impulsive kicks, B delayed by `τ`, on the
    /// window `t ∈ [t_start, t_start + (nt−1)·dt_out]`.
    pub fn scan(&self, taus: &[f64], t_start: f64, dt_out: f64, nt: usize) -> Scan2D {
        let width = 0.06;
        let kick = move |t: f64| -(t / width) * (-(t * t) / (2.0 * width * width)).exp();
        let dt = 0.002;
        let stride = (dt_out / dt).round() as usize;
        let earliest = t_start.min(taus[0]).min(0.0) - 1.0;
        let skip = ((t_start - earliest) / dt_out).ceil() as usize;
        let t0 = t_start - skip as f64 * dt_out;
        let lead = skip * stride;
        let steps = lead + (nt - 1) * stride;
        let mut values = Vec::with_capacity(taus.len() * nt);
        let xa = self.response(&kick, t0, dt, steps, stride);
        for &tau in taus {
            let ab = self.response(&|t| kick(t) + kick(t - tau), t0, dt, steps, stride);
            let xb = self.response(&|t| kick(t - tau), t0, dt, steps, stride);
            for k in 0..nt {
                values.push(ab[skip + k] - xa[skip + k] - xb[skip + k]);
            }
        }
        let step = taus[1] - taus[0];
        Scan2D::new(
            Axis::new("tau", "ps", taus[0], step, taus.len()).unwrap(),
            Axis::new("t", "ps", t_start, dt_out, nt).unwrap(),
            values,
        )
        .unwrap()
    }
}

/// Location key of a brute-force catalog entry: rounded `(ν_t, ν_τ)` and
/// whether one field's quanta cancel.
pub type BruteKey = (i64, i64, bool);

/// Counts every ordered sequence of `order` interactions
/// `(field ∈ {A, B}, mode, ±)` by the location it radiates at. Sequences that
/// miss a field or radiate at `ν_t ≤ 0` are dropped.
pub fn brute_force_catalog(freqs: &[f64], order: usize) -> BTreeMap<BruteKey, u64> {
    let letters: Vec<(usize, usize, i32)> = (0..2)
        .flat_map(|field| (0..freqs.len()).flat_map(move |m| [(field, m, 1), (field, m, -1)]))
        .collect();
    let n = letters.len();
    let mut out = BTreeMap::new();
    let total = n.pow(order as u32);
    for code in 0..total {
        let mut c = code;
        let (mut nu_t, mut nu_tau) = (0.0, 0.0);
        let mut net = [0i32; 2];
        let mut seen = [false; 2];
        for _ in 0..order {
            let (field, mode, sign) = letters[c % n];
            c /= n;
            let v = sign as f64 * freqs[mode];
            nu_t += v;
            if field == 1 {
                nu_tau += v;
            }
            net[field] += sign;
            seen[field] = true;
        }
        if !(seen[0] && seen[1]) || nu_t <= 1e-6 {
            continue;
        }
        let key = ((nu_t * 1e6).round() as i64, (nu_tau * 1e6).round() as i64, net[0] == 0 || net[1] == 0);
        *out.entry(key).or_insert(0) += 1;
    }
    out
}
