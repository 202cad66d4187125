//! Fourier tools on the uniform periodic grid `s_j = 2πj/M`, `j = 0..M`.
//!
//! Coefficients use the convention `f(s) = Σ c_n e^{ins}` with
//! `c_n = (1/M) Σ_j f(s_j) e^{-ins_j}` stored in FFT order.

use std::cell::RefCell;
use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Equispaced samples of `[0, 2π)`.
pub fn grid(m: usize) -> Vec<f64> {
    let h = 2.0 * PI / m as f64;
    (0..m).map(|j| j as f64 * h).collect()
}

/// Signed wavenumber of FFT slot `k`. The Nyquist slot of an even grid is
/// reported as `+M/2`.
pub fn wavenumber(k: usize, m: usize) -> i64 {
    if 2 * k <= m {
        k as i64
    } else {
        k as i64 - m as i64
    }
}

/// FFT slot holding wavenumber `n`, if it is resolved on an `m`-point grid.
pub fn slot(n: i64, m: usize) -> Option<usize> {
    let half = (m / 2) as i64;
    if n.abs() > half || (n == -half && m % 2 == 0) {
        return None;
    }
    Some(if n >= 0 { n as usize } else { (m as i64 + n) as usize })
}

fn transform(buf: &mut [Complex64], inverse: bool) {
    let m = buf.len();
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let fft = if inverse {
            p.plan_fft_inverse(m)
        } else {
            p.plan_fft_forward(m)
        };
        fft.process(buf);
    });
}

/// Normalized Fourier coefficients of real samples.
pub fn coefficients(f: &[f64]) -> Vec<Complex64> {
    let m = f.len();
    let mut buf: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    transform(&mut buf, false);
    let scale = 1.0 / m as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Real part of the synthesis `Σ c_n e^{ins_j}`.
pub fn synthesize(coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    transform(&mut buf, true);
    buf.iter().map(|c| c.re).collect()
}

/// Apply a Fourier multiplier `σ(n)` to real samples.
pub fn apply_multiplier(f: &[f64], sigma: impl Fn(i64) -> Complex64) -> Vec<f64> {
    let m = f.len();
    let mut c = coefficients(f);
    for (k, ck) in c.iter_mut().enumerate() {
        *ck *= sigma(wavenumber(k, m));
    }
    synthesize(&c)
}

/// Spectral first derivative. The Nyquist mode is dropped.
pub fn derivative(f: &[f64]) -> Vec<f64> {
    let m = f.len();
    apply_multiplier(f, |n| {
        if m % 2 == 0 && n == (m / 2) as i64 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, n as f64)
        }
    })
}

/// Spectral second derivative (multiplier `−n²`, Nyquist included).
pub fn second_derivative(f: &[f64]) -> Vec<f64> {
    apply_multiplier(f, |n| Complex64::new(-((n * n) as f64), 0.0))
}

/// Trapezoid rule for `∫₀^{2π} f ds`.
pub fn trapezoid(f: &[f64]) -> f64 {
    2.0 * PI / f.len() as f64 * f.iter().sum::<f64>()
}

/// Split a vector field into its three component arrays.
pub fn components(v: &[Vector3<f64>]) -> [Vec<f64>; 3] {
    [
        v.iter().map(|x| x[0]).collect(),
        v.iter().map(|x| x[1]).collect(),
        v.iter().map(|x| x[2]).collect(),
    ]
}

pub fn assemble(c: &[Vec<f64>; 3]) -> Vec<Vector3<f64>> {
    (0..c[0].len())
        .map(|j| Vector3::new(c[0][j], c[1][j], c[2][j]))
        .collect()
}

/// Componentwise spectral derivative of a vector field.
pub fn derivative_vec(v: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let c = components(v);
    assemble(&[derivative(&c[0]), derivative(&c[1]), derivative(&c[2])])
}

pub fn second_derivative_vec(v: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let c = components(v);
    assemble(&[
        second_derivative(&c[0]),
        second_derivative(&c[1]),
        second_derivative(&c[2]),
    ])
}

pub fn trapezoid_vec(v: &[Vector3<f64>]) -> Vector3<f64> {
    let h = 2.0 * PI / v.len() as f64;
    v.iter().fold(Vector3::zeros(), |acc, x| acc + x) * h
}

/// Antiderivative `F(s) = ∫₀^s f` of periodic samples, including the linear
/// growth `c₀·s` of a nonzero mean.
pub fn antiderivative(f: &[f64]) -> Vec<f64> {
    let m = f.len();
    let mut c = coefficients(f);
    let mean = c[0].re;
    c[0] = Complex64::new(0.0, 0.0);
    for (k, ck) in c.iter_mut().enumerate().skip(1) {
        let n = wavenumber(k, m);
        if m % 2 == 0 && n == (m / 2) as i64 {
            *ck = Complex64::new(0.0, 0.0);
        } else {
            *ck /= Complex64::new(0.0, n as f64);
        }
    }
    let periodic = synthesize(&c);
    let offset = periodic[0];
    grid(m)
        .iter()
        .zip(periodic)
        .map(|(s, p)| p - offset + mean * s)
        .collect()
}

/// Trigonometric resampling onto an `m_new`-point grid (zero padding or
/// truncation of the spectrum). The Nyquist mode of the source is split
/// symmetrically.
pub fn resample(f: &[f64], m_new: usize) -> Vec<f64> {
    let m = f.len();
    if m == m_new {
        return f.to_vec();
    }
    let c = coefficients(f);
    let mut out = vec![Complex64::new(0.0, 0.0); m_new];
    for (k, ck) in c.iter().enumerate() {
        let n = wavenumber(k, m);
        let nyquist_src = m % 2 == 0 && n == (m / 2) as i64;
        let targets: Vec<(i64, f64)> = if nyquist_src {
            vec![(n, 0.5), (-n, 0.5)]
        } else {
            vec![(n, 1.0)]
        };
        for (t, w) in targets {
            if m_new % 2 == 0 && t.abs() == (m_new / 2) as i64 {
                // keep only the real part on the target Nyquist slot
                out[m_new / 2] += Complex64::new(ck.re * w, 0.0);
            } else if let Some(sl) = slot(t, m_new) {
                out[sl] += ck * w;
            }
        }
    }
    synthesize(&out)
}

/// Evaluate the trigonometric interpolant of `f` at an arbitrary point.
pub fn interpolate(coeffs: &[Complex64], s: f64) -> f64 {
    let m = coeffs.len();
    let mut acc = 0.0;
    for (k, ck) in coeffs.iter().enumerate() {
        let n = wavenumber(k, m);
        let w = if m % 2 == 0 && n == (m / 2) as i64 {
            // split Nyquist evenly between ±M/2 so the interpolant is real
            (n as f64 * s).cos() * ck.re
        } else {
            let e = Complex64::from_polar(1.0, n as f64 * s);
            (ck * e).re
        };
        acc += w;
    }
    acc
}
