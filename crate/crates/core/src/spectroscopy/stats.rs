use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

use super::matrix::{Axis, Scan2D, Spectrum2D};

/// Anything defined on a uniform 2D grid.
pub trait Gridded {
    fn axes(&self) -> (&Axis, &Axis);
    fn data(&self) -> &[f64];
}

impl Gridded for Scan2D {
    fn axes(&self) -> (&Axis, &Axis) {
        (&self.tau, &self.t)
    }

    fn data(&self) -> &[f64] {
        &self.values
    }
}

impl Gridded for Spectrum2D {
    fn axes(&self) -> (&Axis, &Axis) {
        (&self.nu_tau, &self.nu_t)
    }

    fn data(&self) -> &[f64] {
        &self.amplitude
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    pub n: usize,
    pub mean: Vec<f64>,
    /// Sample standard deviation (n − 1 normalization) divided by `√n`.
    pub std_error: Vec<f64>,
    /// Bin-averaged standard error over the largest mean value.
    pub normalized_error: f64,
}

pub fn ensemble_stats<G: Gridded>(samples: &[G]) -> Result<EnsembleStats> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Analysis("ensemble statistics need at least two samples".into()));
    }
    let (r0, c0) = samples[0].axes();
    for s in &samples[1..] {
        let (r, c) = s.axes();
        if r.count != r0.count
            || c.count != c0.count
            || (r.start - r0.start).abs() > 1e-9 * r0.step
            || (c.start - c0.start).abs() > 1e-9 * c0.step
            || (r.step - r0.step).abs() > 1e-12 * r0.step
            || (c.step - c0.step).abs() > 1e-12 * c0.step
        {
            return Err(Error::GridMismatch("ensemble members differ in grid".into()));
        }
    }
    let bins = samples[0].data().len();
    let nf = n as f64;
    let mut mean = vec![0.0; bins];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s.data()) {
            *m += v / nf;
        }
    }
    let mut var = vec![0.0; bins];
    for s in samples {
        for ((acc, v), m) in var.iter_mut().zip(s.data()).zip(&mean) {
            *acc += (v - m) * (v - m);
        }
    }
    let std_error: Vec<f64> = var
        .iter()
        .map(|v| (v / (nf - 1.0)).sqrt() / nf.sqrt())
        .collect();
    let peak = mean.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let avg_err = std_error.iter().sum::<f64>() / bins as f64;
    let normalized_error = if peak > 0.0 { avg_err / peak } else { 0.0 };
    Ok(EnsembleStats {
        n,
        mean,
        std_error,
        normalized_error,
    })
}

/// Copy of `scan` with independent Gaussian noise of standard deviation
/// `sigma` (kV/cm) added to every sample.
pub fn add_noise<R: Rng + ?Sized>(scan: &Scan2D, sigma: f64, rng: &mut R) -> Result<Scan2D> {
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid("sigma", e.to_string()))?;
    Ok(Scan2D {
        values: scan.values.iter().map(|v| v + normal.sample(rng)).collect(),
        ..scan.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scan(values: Vec<f64>) -> Scan2D {
        Scan2D::new(
            Axis::new("tau", "ps", 0.0, 1.0, 2).unwrap(),
            Axis::new("t", "ps", 0.0, 1.0, 3).unwrap(),
            values,
        )
        .unwrap()
    }

    #[test]
    fn identical_samples_have_zero_error() {
        let s = scan(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let st = ensemble_stats(&[s.clone(), s.clone(), s]).unwrap();
        assert!(st.std_error.iter().all(|&e| e == 0.0));
        assert_eq!(st.mean, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(st.normalized_error, 0.0);
    }

    #[test]
    fn two_samples_differing_in_one_bin() {
        let eps = 0.3;
        let a = scan(vec![1.0; 6]);
        let mut v = vec![1.0; 6];
        v[4] += eps;
        let st = ensemble_stats(&[a, scan(v)]).unwrap();
        assert!((st.std_error[4] - eps / 2.0).abs() < 1e-15);
        assert!(st.std_error.iter().enumerate().all(|(i, &e)| i == 4 || e == 0.0));
    }

    #[test]
    fn rejects_small_or_mismatched_ensembles() {
        let a = scan(vec![0.0; 6]);
        assert!(ensemble_stats(&[a.clone()]).is_err());
        let b = Scan2D::new(
            Axis::new("tau", "ps", 0.0, 1.0, 3).unwrap(),
            Axis::new("t", "ps", 0.0, 1.0, 2).unwrap(),
            vec![0.0; 6],
        )
        .unwrap();
        assert!(ensemble_stats(&[a, b]).is_err());
    }

    #[test]
    fn noise_has_requested_spread() {
        let base = Scan2D::new(
            Axis::new("tau", "ps", 0.0, 1.0, 100).unwrap(),
            Axis::new("t", "ps", 0.0, 1.0, 100).unwrap(),
            vec![0.0; 10_000],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noisy = add_noise(&base, 0.5, &mut rng).unwrap();
        let var = noisy.values.iter().map(|v| v * v).sum::<f64>() / 10_000.0;
        assert!((var.sqrt() - 0.5).abs() < 0.02);
        let again = add_noise(&base, 0.5, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(noisy, again);
    }
}
