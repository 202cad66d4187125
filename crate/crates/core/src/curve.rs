//! Closed loops of length 2π described by their unit tangent field.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral;

pub const PROJECTION_TOL: f64 = 1e-12;
pub const PROJECTION_MAX_ITER: usize = 500;
const MIN_RAW_NORM: f64 = 1e-8;

/// Default grid for a field with nominal mode cutoff `modes`.
pub fn grid_size(modes: usize) -> usize {
    (4 * modes + 4).max(256)
}

/// Unit tangent field of a closed loop, sampled on a uniform grid.
///
/// The grid samples are the primary data; Fourier coefficients are derived
/// from them. `modes` is the band of the data the field was generated from.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentField {
    modes: usize,
    samples: Vec<Vector3<f64>>,
    closure_defect: Vector3<f64>,
    unit_defect: f64,
    iterations: usize,
}

impl TangentField {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn grid_size(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[Vector3<f64>] {
        &self.samples
    }

    /// `(1/2π)∫U ds` by the trapezoid rule.
    pub fn closure_defect(&self) -> Vector3<f64> {
        self.closure_defect
    }

    /// `max_j | |U(s_j)| − 1 |`.
    pub fn unit_defect(&self) -> f64 {
        self.unit_defect
    }

    /// Number of mean-subtraction sweeps the projection needed.
    pub fn projection_iterations(&self) -> usize {
        self.iterations
    }

    pub fn s_grid(&self) -> Vec<f64> {
        spectral::grid(self.samples.len())
    }

    /// Complex Fourier coefficients of the three components for modes
    /// `−n..=n`, clipped to what the grid resolves.
    pub fn coefficients(&self, n: usize) -> [Vec<Complex64>; 3] {
        let m = self.samples.len();
        let comps = spectral::components(&self.samples);
        let mut out: [Vec<Complex64>; 3] = Default::default();
        for (c, comp) in comps.iter().enumerate() {
            let coeffs = spectral::coefficients(comp);
            out[c] = (-(n as i64)..=(n as i64))
                .map(|k| {
                    spectral::slot(k, m)
                        .map(|sl| coeffs[sl])
                        .unwrap_or(Complex64::new(0.0, 0.0))
                })
                .collect();
        }
        out
    }

    /// Same field resampled onto a different grid and re-projected. The
    /// nominal mode count is capped at what the new grid supports.
    pub fn resampled(&self, m: usize) -> Result<TangentField> {
        if m == self.samples.len() {
            return Ok(self.clone());
        }
        let comps = spectral::components(&self.samples);
        let raw = spectral::assemble(&[
            spectral::resample(&comps[0], m),
            spectral::resample(&comps[1], m),
            spectral::resample(&comps[2], m),
        ]);
        let modes = self.modes.min(m.saturating_sub(4) / 4).max(1);
        project_to_admissible(&raw, modes)
    }

    /// Apply a global rotation.
    pub fn rotated(&self, r: &Matrix3<f64>) -> TangentField {
        TangentField {
            samples: self.samples.iter().map(|u| r * u).collect(),
            closure_defect: r * self.closure_defect,
            ..self.clone()
        }
    }
}

fn defects(samples: &[Vector3<f64>]) -> (Vector3<f64>, f64) {
    let mean = samples.iter().fold(Vector3::zeros(), |a, u| a + u) / samples.len() as f64;
    let unit = samples
        .iter()
        .map(|u| (u.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    (mean, unit)
}

/// Project sampled raw data onto admissible tangent fields (`|U| ≡ 1`,
/// `∫U ds = 0`) by alternating pointwise normalization and mean removal.
pub fn project_to_admissible(raw: &[Vector3<f64>], modes: usize) -> Result<TangentField> {
    if raw.len() < 4 * modes + 4 {
        return Err(Error::DimensionMismatch {
            expected: 4 * modes + 4,
            got: raw.len(),
        });
    }
    let min_norm = raw.iter().map(|u| u.norm()).fold(f64::INFINITY, f64::min);
    if !(min_norm > MIN_RAW_NORM) {
        return Err(Error::DegenerateInput { min_norm });
    }
    let mut u = raw.to_vec();
    let mut iterations = 0;
    loop {
        let (mean, unit) = defects(&u);
        if mean.norm() < PROJECTION_TOL && unit < PROJECTION_TOL {
            return Ok(TangentField {
                modes,
                samples: u,
                closure_defect: mean,
                unit_defect: unit,
                iterations,
            });
        }
        if iterations >= PROJECTION_MAX_ITER {
            return Err(Error::NonConvergence {
                what: "closure projection",
                iterations,
                residual: mean.norm().max(unit),
            });
        }
        iterations += 1;
        for x in u.iter_mut() {
            *x -= mean;
        }
        for x in u.iter_mut() {
            let n = x.norm();
            if !(n > MIN_RAW_NORM) {
                return Err(Error::DegenerateInput { min_norm: n });
            }
            *x /= n;
        }
    }
}

/// Grid fine enough to resolve the tangent of an ellipse with axis ratio
/// `beta/alpha`: its analytic strip has half-width `atanh(beta/alpha)`.
pub fn family_grid_size(alpha: f64, beta: f64) -> usize {
    let strip = (beta / alpha).atanh();
    let needed = (64.0 / strip).ceil() as usize;
    needed.max(256).next_power_of_two().min(4096)
}

/// Tangent of a loop in the family: `R·(α cos s, β sin s, 0)` normalized.
pub fn family_f(alpha: f64, beta: f64, rotation: &Matrix3<f64>) -> Result<TangentField> {
    check_axes(alpha, beta)?;
    family_f_on_grid(alpha, beta, rotation, family_grid_size(alpha, beta))
}

pub fn family_f_on_grid(
    alpha: f64,
    beta: f64,
    rotation: &Matrix3<f64>,
    m: usize,
) -> Result<TangentField> {
    check_axes(alpha, beta)?;
    if (rotation.transpose() * rotation - Matrix3::identity()).norm() > 1e-10 {
        return Err(Error::InvalidInput("rotation is not orthogonal".into()));
    }
    let samples: Vec<Vector3<f64>> = spectral::grid(m)
        .iter()
        .map(|&s| {
            let v = Vector3::new(alpha * s.cos(), beta * s.sin(), 0.0);
            rotation * (v / v.norm())
        })
        .collect();
    let (closure_defect, unit_defect) = defects(&samples);
    Ok(TangentField {
        modes: m / 4 - 1,
        samples,
        closure_defect,
        unit_defect,
        iterations: 0,
    })
}

pub(crate) fn check_axes(alpha: f64, beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= alpha && alpha.is_finite()) {
        return Err(Error::InvalidAxes { alpha, beta });
    }
    Ok(())
}

/// Reconstructed loop: arclength grid, positions `Y(s)` with `Y(0) = 0`, and
/// curvature samples.
#[derive(Debug, Clone)]
pub struct CurveSamples {
    pub s_grid: Vec<f64>,
    pub position: Vec<Vector3<f64>>,
    pub curvature: Vec<f64>,
    /// `|Y(2π) − Y(0)|`, i.e. `2π·|closure defect|`.
    pub closure_gap: f64,
}

impl CurveSamples {
    pub fn total_curvature(&self) -> f64 {
        spectral::trapezoid(&self.curvature)
    }
}

pub fn curvature(u: &TangentField) -> CurveSamples {
    let du = spectral::derivative_vec(&u.samples);
    let curvature = du.iter().map(|d| d.norm()).collect();
    let comps = spectral::components(&u.samples);
    let position = spectral::assemble(&[
        spectral::antiderivative(&comps[0]),
        spectral::antiderivative(&comps[1]),
        spectral::antiderivative(&comps[2]),
    ]);
    CurveSamples {
        s_grid: u.s_grid(),
        position,
        curvature,
        closure_gap: 2.0 * PI * u.closure_defect.norm(),
    }
}

/// JSON curve file: Fourier coefficients of the three components of `U`
/// for modes `−N..=N`, each as `[re, im]`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CurveFile {
    pub modes: usize,
    pub components: Vec<Vec<[f64; 2]>>,
}

impl CurveFile {
    pub fn from_field(u: &TangentField, modes: usize) -> Self {
        let c = u.coefficients(modes);
        CurveFile {
            modes,
            components: c
                .iter()
                .map(|comp| comp.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }

    /// Synthesize on the default grid and project to an admissible field.
    pub fn to_field(&self) -> Result<TangentField> {
        let n = self.modes;
        if self.components.len() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: self.components.len(),
            });
        }
        let m = grid_size(n);
        let mut comps: [Vec<f64>; 3] = Default::default();
        for (c, data) in self.components.iter().enumerate() {
            if data.len() != 2 * n + 1 {
                return Err(Error::DimensionMismatch {
                    expected: 2 * n + 1,
                    got: data.len(),
                });
            }
            let mut coeffs = vec![Complex64::new(0.0, 0.0); m];
            for (i, z) in data.iter().enumerate() {
                let k = i as i64 - n as i64;
                let sl = spectral::slot(k, m).expect("grid resolves all modes");
                coeffs[sl] = Complex64::new(z[0], z[1]);
            }
            comps[c] = spectral::synthesize(&coeffs);
        }
        project_to_admissible(&spectral::assemble(&comps), n)
    }
}

pub fn read_curve_json(text: &str) -> Result<TangentField> {
    let file: CurveFile = serde_json::from_str(text)?;
    file.to_field()
}

/// CSV with header `s,Ux,Uy,Uz` on a uniform grid of `[0, 2π)`; resampled
/// trigonometrically onto the default grid.
pub fn read_curve_csv(text: &str) -> Result<TangentField> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with('s')) {
            continue;
        }
        let vals: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|t| t.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|e| Error::InvalidInput(format!("line {}: {e}", i + 1)))?;
        if vals.len() != 4 {
            return Err(Error::InvalidInput(format!(
                "line {}: expected 4 columns, got {}",
                i + 1,
                vals.len()
            )));
        }
        rows.push(vals);
    }
    let count = rows.len();
    if count < 8 {
        return Err(Error::InvalidInput("curve CSV needs at least 8 rows".into()));
    }
    let h = 2.0 * PI / count as f64;
    for (j, r) in rows.iter().enumerate() {
        if (r[0] - j as f64 * h).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "row {j}: s = {} is not on the uniform grid of [0, 2π)",
                r[0]
            )));
        }
    }
    let m = count.max(256).next_power_of_two();
    let comps: [Vec<f64>; 3] = std::array::from_fn(|c| {
        let col: Vec<f64> = rows.iter().map(|r| r[c + 1]).collect();
        spectral::resample(&col, m)
    });
    project_to_admissible(&spectral::assemble(&comps), (m - 4) / 4)
}

pub fn write_curve_csv(u: &TangentField) -> String {
    let mut out = String::from("s,Ux,Uy,Uz\n");
    for (s, x) in u.s_grid().iter().zip(u.samples()) {
        out.push_str(&format!("{s:e},{:e},{:e},{:e}\n", x[0], x[1], x[2]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw_from(m: usize, f: impl Fn(f64) -> Vector3<f64>) -> Vec<Vector3<f64>> {
        spectral::grid(m).into_iter().map(f).collect()
    }

    #[test]
    fn circle_needs_no_correction() {
        let raw = raw_from(256, |s| Vector3::new(s.cos(), s.sin(), 0.0));
        let u = project_to_admissible(&raw, 1).unwrap();
        assert_eq!(u.projection_iterations(), 0);
        assert!(u.closure_defect().norm() < 1e-15);
        for (a, b) in u.samples().iter().zip(&raw) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn symmetric_ellipse_tangent_is_already_closed() {
        let raw = raw_from(256, |s| Vector3::new(s.cos(), 0.5 * s.sin(), 0.0));
        let u = project_to_admissible(&raw, 1).unwrap();
        assert!(u.projection_iterations() <= 1);
        for (s, x) in u.s_grid().iter().zip(u.samples()) {
            let d = (s.cos().powi(2) + 0.25 * s.sin().powi(2)).sqrt();
            assert!((x[0] - s.cos() / d).abs() < 1e-14);
            assert!((x[1] - 0.5 * s.sin() / d).abs() < 1e-14);
        }
    }

    #[test]
    fn offset_circle_converges() {
        let raw = raw_from(256, |s| Vector3::new(s.cos() + 0.1, s.sin(), 0.05));
        let u = project_to_admissible(&raw, 1).unwrap();
        assert!(u.projection_iterations() > 0);
        // verify both defects independently of the stored values
        let mean = spectral::trapezoid_vec(u.samples()) / (2.0 * PI);
        assert!(mean.norm() < 1e-12);
        assert!(u.samples().iter().all(|x| (x.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn vanishing_input_is_rejected() {
        let raw = raw_from(256, |s| Vector3::new(s.cos(), 0.0, 0.0));
        assert!(matches!(
            project_to_admissible(&raw, 1),
            Err(Error::DegenerateInput { .. })
        ));
    }

    #[test]
    fn family_rejects_bad_axes() {
        let r = Matrix3::identity();
        assert!(matches!(family_f(1.0, 0.0, &r), Err(Error::InvalidAxes { .. })));
        assert!(matches!(family_f(1.0, 1.5, &r), Err(Error::InvalidAxes { .. })));
    }

    #[test]
    fn family_curvature_matches_closed_form() {
        for &(a, b) in &[(1.0, 1.0), (1.0, 0.5), (2.0, 1.0), (1.0, 0.2)] {
            let u = family_f(a, b, &Matrix3::identity()).unwrap();
            assert!(u.unit_defect() < 1e-12 && u.closure_defect().norm() < 1e-12);
            let c = curvature(&u);
            for (s, k) in c.s_grid.iter().zip(&c.curvature) {
                let exact = a * b / (a * a * s.cos().powi(2) + b * b * s.sin().powi(2));
                assert!((k - exact).abs() < 1e-8, "a={a} b={b} s={s}: {k} vs {exact}");
            }
            assert!(c.closure_gap < 1e-9);
            assert!(c.total_curvature() >= 2.0 * PI - 1e-6);
        }
    }

    #[test]
    fn curvature_is_rotation_invariant() {
        let r = nalgebra::Rotation3::from_axis_angle(&Vector3::x_axis(), PI / 2.0);
        let a = curvature(&family_f(2.0, 1.0, &Matrix3::identity()).unwrap());
        let b = curvature(&family_f(2.0, 1.0, r.matrix()).unwrap());
        for (x, y) in a.curvature.iter().zip(&b.curvature) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn ellipse_curvature_extremes() {
        let u = family_f(1.0, 0.5, &Matrix3::identity()).unwrap();
        let c = curvature(&u);
        let m = c.curvature.len();
        assert!((c.curvature[0] - 0.5).abs() < 1e-10);
        assert!((c.curvature[m / 4] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn curve_file_round_trip() {
        let raw = raw_from(256, |s| {
            Vector3::new(s.cos() + 0.1 * (2.0 * s).cos(), s.sin(), 0.1 * (3.0 * s).sin())
        });
        let u = project_to_admissible(&raw, 3).unwrap();
        let file = CurveFile::from_field(&u, 127);
        let text = serde_json::to_string(&file).unwrap();
        let v = read_curve_json(&text).unwrap();
        let w = v.resampled(256).unwrap();
        for (a, b) in u.samples().iter().zip(w.samples()) {
            assert!((a - b).norm() < 1e-9);
        }
        let csv = write_curve_csv(&u);
        let x = read_curve_csv(&csv).unwrap();
        for (a, b) in u.samples().iter().zip(x.samples()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn csv_rejects_nonuniform_grid() {
        let mut csv = String::from("s,Ux,Uy,Uz\n");
        for j in 0..16 {
            let s = j as f64 * 0.4;
            csv.push_str(&format!("{s},{},{},0\n", s.cos(), s.sin()));
        }
        assert!(read_curve_csv(&csv).is_err());
    }
}
