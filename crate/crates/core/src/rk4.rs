//! Classical fixed-step fourth-order Runge-Kutta for complex state vectors.
//!
//! The step size is fixed so that runs driven by different pulse
//! combinations share identical arithmetic, which keeps the subtraction
//! `E_AB − E_A − E_B` free of integrator noise.

use num_complex::Complex64;

pub trait ComplexOde {
    /// Called once per step with the step-initial state, before any stage.
    fn begin_step(&mut self, _t: f64, _y: &[Complex64]) {}

    fn derivative(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]);
}

#[derive(Clone, Debug, Default)]
pub struct Rk4 {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); dim];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    /// Advances `y` from `t` to `t + h`.
    pub fn step<S: ComplexOde>(&mut self, sys: &mut S, t: f64, h: f64, y: &mut [Complex64]) {
        let n = y.len();
        if self.k1.len() != n {
            *self = Self::new(n);
        }
        sys.begin_step(t, y);

        sys.derivative(t, y, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = y[i] + self.k1[i] * (0.5 * h);
        }
        sys.derivative(t + 0.5 * h, &self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = y[i] + self.k2[i] * (0.5 * h);
        }
        sys.derivative(t + 0.5 * h, &self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = y[i] + self.k3[i] * h;
        }
        sys.derivative(t + h, &self.tmp, &mut self.k4);

        let h6 = h / 6.0;
        for i in 0..n {
            y[i] += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * h6;
        }
    }
}

pub(crate) fn all_finite(y: &[Complex64]) -> bool {
    y.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}
