//! Bosonic light-matter Hamiltonian and its Hopfield-Bogoliubov diagonalization.
//!
//! The single-mode problem couples the LC cavity mode `a` to the cyclotron
//! mode `b` with anti-resonant terms and a diamagnetic `D (a + a†)²` shift,
//! `D = Ω²/ω_c`. Normal-mode operators `p = w a + x b + y a† + z b†` satisfy
//! `[p, H] = ω p`, which is the eigenproblem of the 4×4 matrix built here.

use nalgebra::{DMatrix, DVector, Matrix4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::units::{angular_to_thz, thz_to_angular};

/// Cyclotron frequency (THz) used in place of exactly zero, where the
/// diamagnetic term is a removable singularity.
pub const DEGENERATE_NU_C: f64 = 1e-3;

const IMAG_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HopfieldInput {
    /// LC mode angular frequency (rad/ps).
    pub omega_cavity: f64,
    /// Cyclotron angular frequency (rad/ps).
    pub omega_cyclotron: f64,
    /// Vacuum Rabi angular frequency (rad/ps).
    pub omega_rabi_vac: f64,
    /// Diamagnetic shift `Ω²/ω_c` (rad/ps); zero when `ω_c = 0`.
    pub diamagnetic: f64,
}

impl HopfieldInput {
    pub fn new(omega_cavity: f64, omega_cyclotron: f64, omega_rabi_vac: f64) -> Result<Self> {
        for (name, v) in [
            ("omega_cavity", omega_cavity),
            ("omega_cyclotron", omega_cyclotron),
            ("omega_rabi_vac", omega_rabi_vac),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        let diamagnetic = if omega_cyclotron > 0.0 {
            omega_rabi_vac * omega_rabi_vac / omega_cyclotron
        } else {
            0.0
        };
        Ok(Self {
            omega_cavity,
            omega_cyclotron,
            omega_rabi_vac,
            diamagnetic,
        })
    }

    /// Builds the input from ordinary frequencies in THz.
    pub fn from_thz(nu_cavity: f64, nu_cyclotron: f64, nu_rabi_vac: f64) -> Result<Self> {
        Self::new(
            thz_to_angular(nu_cavity),
            thz_to_angular(nu_cyclotron),
            thz_to_angular(nu_rabi_vac),
        )
    }
}

/// Normal-mode coefficients `(w, x, y, z)` of one polariton operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HopfieldCoefficients {
    pub w: Complex64,
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

impl HopfieldCoefficients {
    /// `|w|² + |x|² − |y|² − |z|²`, equal to one after normalization.
    pub fn bogoliubov_norm(&self) -> f64 {
        self.w.norm_sqr() + self.x.norm_sqr() - self.y.norm_sqr() - self.z.norm_sqr()
    }

    /// Weight of the matter mode, used to break ties at exact degeneracy.
    pub fn matter_weight(&self) -> f64 {
        self.x.norm_sqr()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolaritonBranches {
    /// Lower polariton frequency (THz).
    pub lower: f64,
    /// Upper polariton frequency (THz).
    pub upper: f64,
    /// Coefficients for `[lower, upper]`.
    pub hopfield_coefficients: [HopfieldCoefficients; 2],
}

/// The Hopfield matrix acting on `(w, x, y, z)`.
pub fn build_hopfield_matrix(input: &HopfieldInput) -> Matrix4<f64> {
    let wl = input.omega_cavity;
    let wc = input.omega_cyclotron;
    let g = input.omega_rabi_vac;
    let d2 = 2.0 * input.diamagnetic;
    #[rustfmt::skip]
    let m = Matrix4::new(
        wl + d2,  g,   d2,        g,
        g,        wc,  g,         0.0,
        -d2,     -g,  -wl - d2,  -g,
        -g,       0.0, -g,       -wc,
    );
    m
}

/// Eigenvalues of a general real matrix, rejecting any with a significant
/// imaginary part.
fn real_spectrum(m: DMatrix<f64>) -> Result<Vec<f64>> {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let eig = m
        .try_schur(1e-14 * scale, 10_000)
        .ok_or_else(|| Error::Eigen("Schur decomposition did not converge".into()))?
        .complex_eigenvalues();
    eig.iter()
        .map(|l| {
            if l.im.abs() > IMAG_TOLERANCE * l.norm().max(1e-300) {
                Err(Error::Eigen(format!(
                    "complex eigenvalue {l} (unphysical parameter set)"
                )))
            } else {
                Ok(l.re)
            }
        })
        .collect()
}

/// Null vector of `m − λ I` via the smallest singular value.
fn null_vector(m: &Matrix4<f64>, lambda: f64) -> Result<[f64; 4]> {
    let shifted = m - Matrix4::identity() * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Eigen("SVD did not produce V".into()))?;
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("4 singular values");
    let row = v_t.row(idx);
    Ok([row[0], row[1], row[2], row[3]])
}

/// Diagonalizes the single-mode problem into its two physical branches.
pub fn diagonalize(input: &HopfieldInput) -> Result<PolaritonBranches> {
    if input.omega_cyclotron == 0.0 && input.omega_rabi_vac > 0.0 {
        return Err(Error::Eigen(
            "zero cyclotron frequency with finite coupling is degenerate; \
             use the sweep continuation"
                .into(),
        ));
    }
    let m = build_hopfield_matrix(input);
    let eigenvalues = real_spectrum(DMatrix::from_iterator(4, 4, m.iter().copied()))?;
    let mut positive: Vec<f64> = eigenvalues.into_iter().filter(|&l| l >= 0.0).collect();
    positive.sort_by(f64::total_cmp);
    if positive.len() != 2 {
        return Err(Error::Eigen(format!(
            "expected two non-negative eigenvalues, got {}",
            positive.len()
        )));
    }

    let mut branches = Vec::with_capacity(2);
    let degenerate = (positive[1] - positive[0]).abs() <= 1e-12 * positive[1].max(1e-300);
    for &lambda in &positive {
        let coeff = if input.omega_rabi_vac == 0.0 || degenerate {
            // Decoupled or degenerate: the null space is two-dimensional, so
            // pick the pure modes explicitly.
            None
        } else {
            let v = null_vector(&m, lambda)?;
            let c = HopfieldCoefficients {
                w: v[0].into(),
                x: v[1].into(),
                y: (-v[2]).into(),
                z: (-v[3]).into(),
            };
            let norm = c.bogoliubov_norm();
            if norm <= 0.0 {
                return Err(Error::Eigen(format!(
                    "non-positive Bogoliubov norm {norm} at {lambda}"
                )));
            }
            let s = 1.0 / norm.sqrt();
            Some(HopfieldCoefficients {
                w: c.w * s,
                x: c.x * s,
                y: c.y * s,
                z: c.z * s,
            })
        };
        branches.push((lambda, coeff));
    }

    let pure_photon = HopfieldCoefficients {
        w: 1.0.into(),
        x: 0.0.into(),
        y: 0.0.into(),
        z: 0.0.into(),
    };
    let pure_matter = HopfieldCoefficients {
        w: 0.0.into(),
        x: 1.0.into(),
        y: 0.0.into(),
        z: 0.0.into(),
    };
    let mut resolved: Vec<(f64, HopfieldCoefficients)> = if branches.iter().any(|b| b.1.is_none()) {
        // Decoupled: frequencies are the bare ones; assign by identity.
        let (lo, hi) = (positive[0], positive[1]);
        let matter_is_lower = input.omega_cyclotron <= input.omega_cavity;
        if matter_is_lower {
            vec![(lo, pure_matter), (hi, pure_photon)]
        } else {
            vec![(lo, pure_photon), (hi, pure_matter)]
        }
    } else {
        branches.into_iter().map(|(l, c)| (l, c.unwrap())).collect()
    };
    // Real part ascending, ties by matter weight descending.
    resolved.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(b.1.matter_weight().total_cmp(&a.1.matter_weight()))
    });

    Ok(PolaritonBranches {
        lower: angular_to_thz(resolved[0].0),
        upper: angular_to_thz(resolved[1].0),
        hopfield_coefficients: [resolved[0].1, resolved[1].1],
    })
}

/// Describes how the coupling follows the cyclotron frequency in a sweep.
///
/// The vacuum Rabi frequency of a Landau-quantized gas scales with the square
/// root of the cyclotron frequency (its oscillator strength grows with the
/// Landau degeneracy), so `Ω(ν_c) = ratio · ω_LC · sqrt(ν_c / ν_ref)` and the
/// diamagnetic term stays constant along the sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepTemplate {
    /// LC mode frequency (THz).
    pub nu_cavity: f64,
    /// `Ω_R^V / ω_LC` at the reference cyclotron frequency.
    pub coupling_ratio: f64,
    /// Cyclotron frequency (THz) where `coupling_ratio` applies.
    pub nu_reference: f64,
}

impl SweepTemplate {
    /// The anti-crossing used for the 6-QW structure.
    pub fn six_qw() -> Self {
        Self {
            nu_cavity: 0.81,
            coupling_ratio: 0.77,
            nu_reference: 0.84,
        }
    }

    pub fn input_at(&self, nu_c: f64) -> Result<HopfieldInput> {
        let nu_c = if nu_c == 0.0 { DEGENERATE_NU_C } else { nu_c };
        let omega_lc = thz_to_angular(self.nu_cavity);
        let rabi = self.coupling_ratio * omega_lc * (nu_c / self.nu_reference).sqrt();
        HopfieldInput::new(omega_lc, thz_to_angular(nu_c), rabi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub nu_c: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Evaluates the branches over a strictly increasing grid of cyclotron
/// frequencies (THz). `ν_c = 0` is evaluated at [`DEGENERATE_NU_C`].
pub fn anticrossing_sweep(template: &SweepTemplate, nu_c_grid: &[f64]) -> Result<Vec<SweepRow>> {
    if nu_c_grid.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid("nu_c_grid", "all entries must be finite and >= 0"));
    }
    if nu_c_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("nu_c_grid", "must be strictly increasing"));
    }
    nu_c_grid
        .iter()
        .map(|&nu_c| {
            let tag = |e: Error| Error::SweepPoint {
                nu_c,
                source: Box::new(e),
            };
            let input = template.input_at(nu_c).map_err(tag)?;
            let b = diagonalize(&input).map_err(tag)?;
            Ok(SweepRow {
                nu_c,
                lower: b.lower,
                upper: b.upper,
            })
        })
        .collect()
}

/// CSV rendering of a sweep: `nu_c_THz,lp1_THz,up1_THz`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    use crate::units::fmt_sig9;
    let mut out = String::from("nu_c_THz,lp1_THz,up1_THz\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_sig9(r.nu_c),
            fmt_sig9(r.lower),
            fmt_sig9(r.upper)
        ));
    }
    out
}

/// Positive normal-mode frequencies (THz, ascending) of several cavity modes
/// `(ω_j, Ω_j)` sharing one cyclotron mode `ω_c`, each with its own
/// diamagnetic term `Ω_j²/ω_c`.
///
/// This is the linearized spectrum of the mean-field dynamics and locates the
/// polaritons (including the dipolar-mode branch) for peak catalogs.
pub fn normal_mode_frequencies(modes: &[(f64, f64)], omega_c: f64) -> Result<Vec<f64>> {
    if !(omega_c > 0.0) {
        return Err(Error::invalid("omega_c", "must be > 0"));
    }
    let n = modes.len() + 1;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DMatrix::<f64>::zeros(n, n);
    let matter = n - 1;
    for (j, &(omega, rabi)) in modes.iter().enumerate() {
        let d = rabi * rabi / omega_c;
        a[(j, j)] = omega + 2.0 * d;
        b[(j, j)] = 2.0 * d;
        a[(j, matter)] = rabi;
        a[(matter, j)] = rabi;
        b[(j, matter)] = rabi;
        b[(matter, j)] = rabi;
    }
    a[(matter, matter)] = omega_c;
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&a);
    m.view_mut((0, n), (n, n)).copy_from(&b);
    m.view_mut((n, 0), (n, n)).copy_from(&(-&b));
    m.view_mut((n, n), (n, n)).copy_from(&(-&a));
    let mut freqs: Vec<f64> = real_spectrum(m)?
        .into_iter()
        .filter(|&l| l > 0.0)
        .map(angular_to_thz)
        .collect();
    freqs.sort_by(f64::total_cmp);
    if freqs.len() != n {
        return Err(Error::Eigen(format!(
            "expected {n} positive normal modes, got {}",
            freqs.len()
        )));
    }
    Ok(freqs)
}

/// Residual `‖M v − λ v‖` for a normalized branch, in rad/ps.
pub fn eigen_residual(input: &HopfieldInput, nu: f64, c: &HopfieldCoefficients) -> f64 {
    let m = build_hopfield_matrix(input);
    let v = DVector::from_vec(vec![c.w.re, c.x.re, -c.y.re, -c.z.re]);
    let mv = DMatrix::from_iterator(4, 4, m.iter().copied()) * &v;
    (mv - v * thz_to_angular(nu)).norm()
}
