//! Second variation around the elliptical critical orbits
//! `X₀(s) = (α cos s, β sin s, 0)`.
//!
//! Fourier data use the unitary convention `f̂(n) = (2π)^{-1/2}∫e^{-ins}f ds`.
//! The kernel `K(s) = ¼|sin s|` inverts `d²/ds² + 1` on π-periodic functions
//! and acts as the multiplier `1/(1 − n²)` on even modes.

use std::f64::consts::PI;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;
use serde::Serialize;

use crate::curve::check_axes;
use crate::error::{Error, Result};
use crate::spectral;

pub const DEFAULT_MODE_CUTOFF: usize = 256;

/// Smallest `(α − β)/α` accepted by [`closed_form_i`].
pub const CLOSED_FORM_MIN_GAP: f64 = 1e-3;
const TAIL_LIMIT: f64 = 1e-8;
const MAX_GRID: usize = 1 << 20;

/// Uniform grid resolving `A(s)` for axes `(α, β)`: the entries are analytic
/// in a strip of half-width `atanh(β/α)`, so their coefficients decay like
/// `exp(−n·atanh(β/α))`.
pub fn ellipse_grid(alpha: f64, beta: f64) -> usize {
    let strip = (beta / alpha).atanh();
    let needed = if strip.is_finite() { (80.0 / strip).ceil() as usize } else { 0 };
    needed.clamp(256, MAX_GRID).next_power_of_two()
}

/// `|X₀(s)|`.
pub fn orbit_norm(alpha: f64, beta: f64, s: f64) -> f64 {
    (alpha * alpha * s.cos().powi(2) + beta * beta * s.sin().powi(2)).sqrt()
}

/// `A(s) = |X₀|⁻³ [[β²sin², −αβ cos sin, 0], [−αβ cos sin, α²cos², 0], [0, 0, |X₀|²]]`.
pub fn a_at(alpha: f64, beta: f64, s: f64) -> Matrix3<f64> {
    let (sn, cs) = s.sin_cos();
    let r2 = alpha * alpha * cs * cs + beta * beta * sn * sn;
    let r3 = r2 * r2.sqrt();
    Matrix3::new(
        beta * beta * sn * sn,
        -alpha * beta * cs * sn,
        0.0,
        -alpha * beta * cs * sn,
        alpha * alpha * cs * cs,
        0.0,
        0.0,
        0.0,
        r2,
    ) / r3
}

/// `A(s)` on a uniform grid with its unitary Fourier coefficients.
#[derive(Debug, Clone)]
pub struct AMatrixField {
    pub alpha: f64,
    pub beta: f64,
    pub samples: Vec<Matrix3<f64>>,
    /// Entry `(i, j)` coefficients in FFT order, unitary normalization.
    coeffs: [[Vec<Complex64>; 3]; 3],
}

impl AMatrixField {
    pub fn grid_size(&self) -> usize {
        self.samples.len()
    }

    /// `Â(n)`; zero for modes the grid does not resolve.
    pub fn fourier(&self, n: i64) -> Matrix3<Complex64> {
        let m = self.samples.len();
        match spectral::slot(n, m) {
            Some(k) => Matrix3::from_fn(|i, j| self.coeffs[i][j][k]),
            None => Matrix3::zeros(),
        }
    }

    /// Entry `(i, j)` as samples.
    pub fn entry(&self, i: usize, j: usize) -> Vec<f64> {
        self.samples.iter().map(|a| a[(i, j)]).collect()
    }

    /// `Â(0)`, a real diagonal matrix; `Â(0)_ii = (2π)^{-1/2}∫A_ii ds`.
    pub fn a0(&self) -> Matrix3<f64> {
        self.fourier(0).map(|z| z.re)
    }

    /// Smallest eigenvalue of `A(s)` over the grid.
    pub fn min_eigenvalue(&self) -> f64 {
        self.samples
            .iter()
            .map(|a| SymmetricEigen::new(*a).eigenvalues.min())
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn a_matrix(alpha: f64, beta: f64, grid_size: usize) -> Result<AMatrixField> {
    check_axes(alpha, beta)?;
    if grid_size < 64 || grid_size % 4 != 0 {
        return Err(Error::OutOfRange(format!(
            "grid size {grid_size} must be a multiple of 4 and >= 64"
        )));
    }
    let samples: Vec<Matrix3<f64>> = spectral::grid(grid_size)
        .into_iter()
        .map(|s| a_at(alpha, beta, s))
        .collect();
    let unitary = (2.0 * PI).sqrt();
    let coeffs = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let f: Vec<f64> = samples.iter().map(|a| a[(i, j)]).collect();
            spectral::coefficients(&f)
                .into_iter()
                .map(|c| c * unitary)
                .collect()
        })
    });
    Ok(AMatrixField {
        alpha,
        beta,
        samples,
        coeffs,
    })
}

fn odd_mass(c: &[Complex64]) -> f64 {
    let m = c.len();
    (0..m)
        .filter(|&k| spectral::wavenumber(k, m) % 2 != 0)
        .map(|k| c[k].norm())
        .fold(0.0, f64::max)
}

/// `K*f` for π-periodic samples (odd modes must vanish).
pub fn convolve_k(f: &[f64]) -> Result<Vec<f64>> {
    let m = f.len();
    if m % 4 != 0 {
        return Err(Error::OutOfRange(format!(
            "grid size {m} must be a multiple of 4"
        )));
    }
    let mut c = spectral::coefficients(f);
    let odd = odd_mass(&c);
    let scale = c.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if odd > 1e-10 * scale {
        return Err(Error::NotPiPeriodic { odd_mass: odd });
    }
    for (k, ck) in c.iter_mut().enumerate() {
        let n = spectral::wavenumber(k, m);
        *ck = if n % 2 == 0 {
            *ck / (1.0 - (n * n) as f64)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    Ok(spectral::synthesize(&c))
}

/// `⟨f, K*f⟩ = Σ |f̂(n)|²/(1 − n²)` over even modes.
fn k_form(f: &[f64]) -> f64 {
    let m = f.len();
    let c = spectral::coefficients(f);
    2.0 * PI
        * c.iter()
            .enumerate()
            .filter_map(|(k, z)| {
                let n = spectral::wavenumber(k, m);
                (n % 2 == 0).then(|| z.norm_sqr() / (1.0 - (n * n) as f64))
            })
            .sum::<f64>()
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct IIntegrals {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

fn i_from_field(a: &AMatrixField) -> IIntegrals {
    let a11 = k_form(&a.entry(0, 0));
    let a12 = k_form(&a.entry(0, 1));
    let a22 = k_form(&a.entry(1, 1));
    let a33 = k_form(&a.entry(2, 2));
    IIntegrals {
        i1: a11 + a12,
        i2: a22 + a12,
        i3: a33,
    }
}

/// The kernel-weighted integrals `I₁, I₂, I₃` of the entries of `A`.
pub fn i_integrals(alpha: f64, beta: f64) -> Result<IIntegrals> {
    let a = a_matrix(alpha, beta, ellipse_grid(alpha, beta))?;
    Ok(i_from_field(&a))
}

/// `I₁, I₂` through the single form `J = ⟨|X₀|⁻¹, K*|X₀|⁻¹⟩`:
/// `I₁ = β²((α²+β²)J − 4π)/(α²−β²)²` and the same with `α²` for `I₂`. The
/// constant comes from `⟨|X₀|⁻¹, |X₀|⟩ = 2π` and `∫|X₀|⁻² = 2π/(αβ)`.
pub fn closed_form_i(alpha: f64, beta: f64) -> Result<(f64, f64)> {
    check_axes(alpha, beta)?;
    let gap = alpha - beta;
    // relative gap, with slack for the rounding of decimal inputs like 0.999
    if gap <= CLOSED_FORM_MIN_GAP * alpha * (1.0 + 1e-12) {
        return Err(Error::DegenerateAxes { gap });
    }
    let m = ellipse_grid(alpha, beta);
    let inv: Vec<f64> = spectral::grid(m)
        .into_iter()
        .map(|s| 1.0 / orbit_norm(alpha, beta, s))
        .collect();
    let j = k_form(&inv);
    let d = (alpha * alpha - beta * beta).powi(2);
    let brace = ((alpha * alpha + beta * beta) * j - 4.0 * PI) / d;
    Ok((beta * beta * brace, alpha * alpha * brace))
}

/// The 3×3 matrix `D`, its lowest eigenvalue `η` and the coercivity constant
/// `η/(2(1 − η))` for one pair of axes.
#[derive(Debug, Clone, Serialize)]
pub struct VariationReport {
    pub alpha: f64,
    pub beta: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    /// Diagonal of `Â(0)`, with `Â(0) = (2π)^{-1/2}∫A ds`.
    pub a0: [f64; 3],
    pub a0_normalization: &'static str,
    /// Row-major.
    pub d: [[f64; 3]; 3],
    pub eta: f64,
    pub bound_constant: f64,
    pub mode_cutoff: usize,
    pub grid_size: usize,
    /// Bound on the contribution of modes beyond the cutoff to `D`.
    pub tail_bound: f64,
}

impl VariationReport {
    pub fn d_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.d[i][j])
    }

    pub fn csv_header() -> &'static str {
        "alpha,beta,I1,I2,I3,eta,bound_constant"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            fmt12(self.alpha),
            fmt12(self.beta),
            fmt12(self.i1),
            fmt12(self.i2),
            fmt12(self.i3),
            fmt12(self.eta),
            fmt12(self.bound_constant)
        )
    }
}

/// Twelve significant digits.
pub fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Smallest mode cutoff whose geometric tail is negligible for these axes.
pub fn auto_mode_cutoff(alpha: f64, beta: f64) -> usize {
    (ellipse_grid(alpha, beta) / 4).max(DEFAULT_MODE_CUTOFF)
}

pub fn d_matrix_eta(alpha: f64, beta: f64, mode_cutoff: usize) -> Result<VariationReport> {
    check_axes(alpha, beta)?;
    if mode_cutoff < 32 {
        return Err(Error::OutOfRange(format!("mode cutoff {mode_cutoff} < 32")));
    }
    let grid = ellipse_grid(alpha, beta).max((4 * mode_cutoff + 4).next_power_of_two());
    let a = a_matrix(alpha, beta, grid)?;
    let a0 = a.a0();
    let a0_inv = Matrix3::from_diagonal(&Vector3::new(1.0 / a0[(0, 0)], 1.0 / a0[(1, 1)], 1.0 / a0[(2, 2)]));

    let n_max = mode_cutoff as i64;
    let mut sum = Matrix3::<Complex64>::zeros();
    for n in -n_max..=n_max {
        if n.abs() == 1 {
            continue;
        }
        let an = a.fourier(n);
        sum += an * an.adjoint() / Complex64::new(1.0 - (n * n) as f64, 0.0);
    }
    let brace = sum.map(|z| z.re);
    let d = a0_inv * brace * a0_inv;
    let d = (d + d.transpose()) * 0.5;

    // geometric tail from the last two even modes
    let even_top = n_max - n_max % 2;
    let last = a.fourier(even_top).norm();
    let prev = a.fourier(even_top - 2).norm();
    // coefficients at roundoff level no longer decay measurably
    let floor = 1e-13 * a0.norm();
    let tail_bound = if last <= floor {
        2.0 * floor * floor / even_top as f64 * a0_inv.norm_squared()
    } else {
        let r = last / prev;
        if !(r < 1.0) {
            f64::INFINITY
        } else {
            2.0 * last * last * r * r / ((1.0 - r * r) * (even_top * even_top) as f64) * a0_inv.norm_squared()
        }
    };
    if !(tail_bound <= TAIL_LIMIT) {
        return Err(Error::TruncationTooCoarse {
            tail: tail_bound,
            limit: TAIL_LIMIT,
        });
    }

    let eta = lowest_eigenvalue(&d);
    let ints = i_from_field(&a);
    Ok(VariationReport {
        alpha,
        beta,
        i1: ints.i1,
        i2: ints.i2,
        i3: ints.i3,
        a0: [a0[(0, 0)], a0[(1, 1)], a0[(2, 2)]],
        a0_normalization: "A0 = (2*pi)^(-1/2) * integral of A(s) over [0, 2*pi)",
        d: std::array::from_fn(|i| std::array::from_fn(|j| d[(i, j)])),
        eta,
        bound_constant: eta / (2.0 * (1.0 - eta)),
        mode_cutoff,
        grid_size: grid,
        tail_bound,
    })
}

/// Smallest eigenvalue of a symmetric 3×3 matrix; falls back to the
/// trigonometric solution of the characteristic cubic.
pub fn lowest_eigenvalue(d: &Matrix3<f64>) -> f64 {
    match SymmetricEigen::try_new(*d, 1e-15, 1000) {
        Some(e) => e.eigenvalues.min(),
        None => symmetric_eigenvalues_closed_form(d)[0],
    }
}

/// Eigenvalues of a symmetric 3×3 matrix in ascending order, from the
/// characteristic polynomial.
pub fn symmetric_eigenvalues_closed_form(a: &Matrix3<f64>) -> [f64; 3] {
    let p1 = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
    let q = a.trace() / 3.0;
    let p2 = (a[(0, 0)] - q).powi(2) + (a[(1, 1)] - q).powi(2) + (a[(2, 2)] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 {
        return [q; 3];
    }
    let b = (a - Matrix3::identity() * q) / p;
    let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    [lo, 3.0 * q - hi - lo, hi]
}

/// `𝓛(x₁) = ½∫(|x₁′|² − |x₁|²)` and the linearized constraint `∫A x₁ ds`.
pub fn second_variation(x1: &[Vector3<f64>], alpha: f64, beta: f64) -> Result<(f64, Vector3<f64>)> {
    check_axes(alpha, beta)?;
    let m = x1.len();
    if m < 8 || m % 2 != 0 {
        return Err(Error::OutOfRange(format!("perturbation grid size {m}")));
    }
    let dx = spectral::derivative_vec(x1);
    let dens: Vec<f64> = dx
        .iter()
        .zip(x1)
        .map(|(d, x)| d.norm_squared() - x.norm_squared())
        .collect();
    let l2 = 0.5 * spectral::trapezoid(&dens);
    let ax: Vec<Vector3<f64>> = spectral::grid(m)
        .into_iter()
        .zip(x1)
        .map(|(s, x)| a_at(alpha, beta, s) * x)
        .collect();
    Ok((l2, spectral::trapezoid_vec(&ax)))
}

/// One row of the small-β table at `α = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticRow {
    pub beta: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub a0: [f64; 3],
    pub eta: f64,
    /// `I₁/(β² ln(1/β))`.
    pub ratio1: f64,
    /// `I₂/ln(1/β)`.
    pub ratio2: f64,
    /// `I₃/ln(1/β)`.
    pub ratio3: f64,
}

impl AsymptoticRow {
    pub fn csv_header() -> &'static str {
        "beta,I1,I2,I3,A0_11,A0_22,A0_33,eta,I1_over_b2logb,I2_over_logb,I3_over_logb"
    }

    pub fn csv_row(&self) -> String {
        [
            self.beta, self.i1, self.i2, self.i3, self.a0[0], self.a0[1], self.a0[2], self.eta, self.ratio1,
            self.ratio2, self.ratio3,
        ]
        .iter()
        .map(|x| fmt12(*x))
        .collect::<Vec<_>>()
        .join(",")
    }
}

pub fn beta_asymptotics(betas: &[f64]) -> Result<Vec<AsymptoticRow>> {
    betas
        .iter()
        .map(|&beta| {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(Error::OutOfRange(format!("beta {beta} must lie in (0, 1)")));
            }
            let r = d_matrix_eta(1.0, beta, auto_mode_cutoff(1.0, beta))?;
            let log = (1.0 / beta).ln();
            Ok(AsymptoticRow {
                beta,
                i1: r.i1,
                i2: r.i2,
                i3: r.i3,
                a0: r.a0,
                eta: r.eta,
                ratio1: r.i1 / (beta * beta * log),
                ratio2: r.i2 / log,
                ratio3: r.i3 / log,
            })
        })
        .collect()
}
