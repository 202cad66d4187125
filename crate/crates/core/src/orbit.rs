//! Orbits `X(s) = Φ(s)U(s)`: the functional `½∫(|X′|² − |X|²)`, the closure
//! integral `∫X/|X|`, the Euler–Lagrange residual and its first integrals.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::curve::TangentField;
use crate::error::{Error, Result};
use crate::spectral;

/// Orbits with a smaller minimum norm are refused by the raw closure
/// quadrature.
pub const NEAR_SINGULAR: f64 = 1e-8;
const ZERO_NORM: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    samples: Vec<Vector3<f64>>,
    min_norm: f64,
    zero_set: Vec<usize>,
}

impl Orbit {
    pub fn new(samples: Vec<Vector3<f64>>) -> Result<Self> {
        if samples.len() < 8 || samples.len() % 2 != 0 {
            return Err(Error::OutOfRange(format!(
                "orbit needs an even number of samples >= 8, got {}",
                samples.len()
            )));
        }
        if samples.iter().any(|x| !x.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidInput("orbit has non-finite samples".into()));
        }
        let norms: Vec<f64> = samples.iter().map(|x| x.norm()).collect();
        let min_norm = norms.iter().copied().fold(f64::INFINITY, f64::min);
        let zero_set = norms
            .iter()
            .enumerate()
            .filter(|(_, n)| **n < ZERO_NORM)
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            samples,
            min_norm,
            zero_set,
        })
    }

    /// Samples `f(s_j)` on the uniform `m`-point grid.
    pub fn from_fn(m: usize, f: impl Fn(f64) -> Vector3<f64>) -> Result<Self> {
        Self::new(spectral::grid(m).into_iter().map(f).collect())
    }

    pub fn samples(&self) -> &[Vector3<f64>] {
        &self.samples
    }

    pub fn grid_size(&self) -> usize {
        self.samples.len()
    }

    pub fn s_grid(&self) -> Vec<f64> {
        spectral::grid(self.samples.len())
    }

    pub fn min_norm(&self) -> f64 {
        self.min_norm
    }

    /// Grid indices where `|X| < 1e−10`.
    pub fn zero_set(&self) -> &[usize] {
        &self.zero_set
    }

    pub fn zero_fraction(&self) -> f64 {
        self.zero_set.len() as f64 / self.samples.len() as f64
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.samples.iter().map(|x| x * c).collect())
    }

    pub fn rotated(&self, r: &Matrix3<f64>) -> Result<Self> {
        Self::new(self.samples.iter().map(|x| r * x).collect())
    }

    fn require_regular(&self) -> Result<()> {
        if self.min_norm <= NEAR_SINGULAR {
            return Err(Error::NearSingularOrbit {
                min_norm: self.min_norm,
            });
        }
        Ok(())
    }
}

/// Multiplier vector `b` of the closure constraint.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LagrangeMultiplier {
    pub b: Vector3<f64>,
}

impl LagrangeMultiplier {
    pub fn new(b: Vector3<f64>) -> Self {
        Self { b }
    }
}

pub fn orbit_from_curve(u: &TangentField, phi: &[f64]) -> Result<Orbit> {
    if phi.len() != u.grid_size() {
        return Err(Error::DimensionMismatch {
            expected: u.grid_size(),
            got: phi.len(),
        });
    }
    if phi.iter().any(|p| !(*p > 0.0)) {
        return Err(Error::InvalidInput("orbit amplitude must be positive".into()));
    }
    Orbit::new(u.samples().iter().zip(phi).map(|(x, p)| x * *p).collect())
}

/// `½∫(|X′|² − |X|²) ds`.
pub fn lagrange_functional(x: &Orbit) -> f64 {
    let dx = spectral::derivative_vec(&x.samples);
    let dens: Vec<f64> = dx
        .iter()
        .zip(&x.samples)
        .map(|(d, v)| d.norm_squared() - v.norm_squared())
        .collect();
    0.5 * spectral::trapezoid(&dens)
}

/// `∫|X′|² / ∫|X|²`.
pub fn rayleigh_orbit(x: &Orbit) -> Result<f64> {
    let mass = spectral::trapezoid(&x.samples.iter().map(|v| v.norm_squared()).collect::<Vec<_>>());
    if !(mass > 0.0) {
        return Err(Error::ZeroOrbit);
    }
    let dx = spectral::derivative_vec(&x.samples);
    let kinetic = spectral::trapezoid(&dx.iter().map(|v| v.norm_squared()).collect::<Vec<_>>());
    Ok(kinetic / mass)
}

/// Trapezoid value of `∫X/|X| ds`, which is `Y(2π) − Y(0)` for the loop the
/// orbit describes.
pub fn closure_integral(x: &Orbit) -> Result<Vector3<f64>> {
    x.require_regular()?;
    let units: Vec<Vector3<f64>> = x.samples.iter().map(|v| v / v.norm()).collect();
    Ok(spectral::trapezoid_vec(&units))
}

/// Constraint force `(|X|²b − (X·b)X)/|X|³`.
pub fn constraint_force(x: &Vector3<f64>, b: &Vector3<f64>) -> Vector3<f64> {
    let n = x.norm();
    (b * (n * n) - x * x.dot(b)) / (n * n * n)
}

#[derive(Debug, Clone)]
pub struct EulerLagrangeResidual {
    pub samples: Vec<Vector3<f64>>,
    /// `(∫|r|² ds)^{1/2}`.
    pub norm: f64,
}

/// `r = X″ + X − (|X|²b − (X·b)X)/|X|³`.
pub fn euler_lagrange_residual(x: &Orbit, b: &LagrangeMultiplier) -> Result<EulerLagrangeResidual> {
    x.require_regular()?;
    let d2 = spectral::second_derivative_vec(&x.samples);
    let samples: Vec<Vector3<f64>> = d2
        .iter()
        .zip(&x.samples)
        .map(|(dd, v)| dd + v - constraint_force(v, &b.b))
        .collect();
    let norm = spectral::trapezoid(&samples.iter().map(|r| r.norm_squared()).collect::<Vec<_>>()).sqrt();
    Ok(EulerLagrangeResidual { samples, norm })
}

#[derive(Debug, Clone)]
pub struct FirstIntegrals {
    pub energy: Vec<f64>,
    pub angular_momentum: Vec<f64>,
    /// Max deviation of each array from its mean.
    pub energy_deviation: f64,
    pub angular_momentum_deviation: f64,
}

/// Energy `½|X′|² + ½|X|² − b·X/|X|` and angular momentum `b·(X × X′)` of
/// a single phase-space state.
pub fn first_integrals_from_state(x: &Vector3<f64>, dx: &Vector3<f64>, b: &Vector3<f64>) -> (f64, f64) {
    let energy = 0.5 * dx.norm_squared() + 0.5 * x.norm_squared() - b.dot(x) / x.norm();
    let angmom = b.dot(&x.cross(dx));
    (energy, angmom)
}

fn max_deviation(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max)
}

pub fn first_integrals(x: &Orbit, b: &LagrangeMultiplier) -> Result<FirstIntegrals> {
    x.require_regular()?;
    let dx = spectral::derivative_vec(&x.samples);
    let (energy, angular_momentum): (Vec<f64>, Vec<f64>) = x
        .samples
        .iter()
        .zip(&dx)
        .map(|(v, d)| first_integrals_from_state(v, d, &b.b))
        .unzip();
    Ok(FirstIntegrals {
        energy_deviation: max_deviation(&energy),
        angular_momentum_deviation: max_deviation(&angular_momentum),
        energy,
        angular_momentum,
    })
}

/// For `|v| ≥ 2|w| > 0`: `|(v+w)/|v+w| − v/|v||` and the bound `4|w|/|v|`.
pub fn direction_perturbation(v: &Vector3<f64>, w: &Vector3<f64>) -> Result<(f64, f64)> {
    let (nv, nw) = (v.norm(), w.norm());
    if !(nw > 0.0 && nv >= 2.0 * nw) {
        return Err(Error::InvalidInput(format!(
            "direction bound needs |v| >= 2|w| > 0, got |v| = {nv}, |w| = {nw}"
        )));
    }
    let s = v + w;
    Ok(((s / s.norm() - v / nv).norm(), 4.0 * nw / nv))
}

pub fn write_orbit_csv(x: &Orbit) -> String {
    let mut out = String::from("s,Xx,Xy,Xz\n");
    for (s, v) in x.s_grid().iter().zip(&x.samples) {
        out.push_str(&format!("{s:e},{:e},{:e},{:e}\n", v[0], v[1], v[2]));
    }
    out
}

pub fn read_orbit_csv(text: &str) -> Result<Orbit> {
    let mut samples = Vec::new();
    let mut s_values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with('s')) {
            continue;
        }
        let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|e| Error::InvalidInput(format!("line {}: {e}", i + 1)))?;
        if vals.len() != 4 {
            return Err(Error::InvalidInput(format!("line {}: expected 4 columns", i + 1)));
        }
        s_values.push(vals[0]);
        samples.push(Vector3::new(vals[1], vals[2], vals[3]));
    }
    let h = 2.0 * PI / samples.len().max(1) as f64;
    if let Some(j) = s_values.iter().enumerate().position(|(j, s)| (s - j as f64 * h).abs() > 1e-9) {
        return Err(Error::InvalidInput(format!("row {j} is off the uniform grid")));
    }
    Orbit::new(samples)
}
