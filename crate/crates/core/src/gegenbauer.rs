//! Exact spectrum of `K_g = −d²/ds² + g sec²(s)` on `(−π/2, π/2)` with
//! Dirichlet conditions, and the Hardy-type inequality that bounds it below.
//!
//! With `a = (1 + √(1+4g))/2` the eigenpairs are `λ_n = (n+a)²` and
//! `w_n(s) = cos^a(s) C_n^{(a)}(sin s)`, where `C_n^{(a)}` is the Gegenbauer
//! polynomial orthogonal for the weight `(1−x²)^{a−1/2}`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::{tanh_sinh, GaussLegendre};

/// Eigenvalues closer than this to `(m+a)²` count as quantized.
pub const QUANTIZATION_TOL: f64 = 1e-12;
pub const MAX_DEGREE: usize = 20;

pub fn exponent_a(g: f64) -> Result<f64> {
    if !(g >= -0.25) || !g.is_finite() {
        return Err(Error::OutOfRange(format!("coupling {g} is below -1/4")));
    }
    Ok(0.5 * (1.0 + (1.0 + 4.0 * g).sqrt()))
}

fn check_coupling(g: f64) -> Result<f64> {
    if !(g > -0.25) {
        return Err(Error::OutOfRange(format!(
            "coupling {g} must exceed -1/4 for a Dirichlet spectrum"
        )));
    }
    exponent_a(g)
}

/// `λ_n = (n + a)²`.
pub fn eigenvalue(g: f64, n: usize) -> Result<f64> {
    let a = check_coupling(g)?;
    Ok((n as f64 + a).powi(2))
}

/// `C_n^{(λ)}(x)` by the upward three-term recurrence.
pub fn gegenbauer_c(n: usize, lambda: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * lambda * x;
    for k in 2..=n {
        let k = k as f64;
        let next = (2.0 * x * (k + lambda - 1.0) * cur - (k + 2.0 * lambda - 2.0) * prev) / k;
        prev = cur;
        cur = next;
    }
    cur
}

/// `∫_{−1}^{1} (1−x²)^{λ−1/2} C_n^{(λ)}(x)² dx`.
pub fn gegenbauer_norm_sq(n: usize, lambda: f64) -> f64 {
    let nf = n as f64;
    let log = PI.ln() + (1.0 - 2.0 * lambda) * 2f64.ln() + ln_gamma(nf + 2.0 * lambda)
        - ln_gamma(nf + 1.0)
        - (nf + lambda).ln()
        - 2.0 * ln_gamma(lambda);
    log.exp()
}

/// The operator `K_g` with its closed-form spectrum.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GegenbauerSpectrum {
    pub g: f64,
    pub a: f64,
}

impl GegenbauerSpectrum {
    pub fn new(g: f64) -> Result<Self> {
        Ok(Self {
            g,
            a: check_coupling(g)?,
        })
    }

    pub fn eigenvalue(&self, n: usize) -> f64 {
        (n as f64 + self.a).powi(2)
    }

    fn check_degree(n: usize) -> Result<()> {
        if n > MAX_DEGREE {
            return Err(Error::OutOfRange(format!("degree {n} exceeds {MAX_DEGREE}")));
        }
        Ok(())
    }

    /// `w_n(s)`, unit norm in `L²(−π/2, π/2)`.
    pub fn eigenfunction_at(&self, n: usize, s: f64) -> f64 {
        self.eigenfunction_jet(n, s)[0]
    }

    /// `(w_n, w_n′, w_n″)` at `s`, from the derivative identities
    /// `d/dx C_n^{(λ)} = 2λ C_{n−1}^{(λ+1)}`.
    pub fn eigenfunction_jet(&self, n: usize, s: f64) -> [f64; 3] {
        let a = self.a;
        let norm = gegenbauer_norm_sq(n, a).sqrt();
        let (x, c) = s.sin_cos();
        let c = c.max(0.0);
        let p = gegenbauer_c(n, a, x);
        let dp = if n >= 1 { 2.0 * a * gegenbauer_c(n - 1, a + 1.0, x) } else { 0.0 };
        let ddp = if n >= 2 {
            4.0 * a * (a + 1.0) * gegenbauer_c(n - 2, a + 2.0, x)
        } else {
            0.0
        };
        let w = c.powf(a) * p;
        // w′ = c^{a−1} u with u = −a x p + c² p′
        let u = -a * x * p + c * c * dp;
        let dw = c.powf(a - 1.0) * u;
        let ddw = c.powf(a - 2.0)
            * (-(a - 1.0) * x * u + c * c * (-a * p - (a + 2.0) * x * dp + c * c * ddp));
        [w / norm, dw / norm, ddw / norm]
    }
}

/// `w_n` sampled at `s`, normalized to unit `L²(−π/2, π/2)` norm.
pub fn eigenfunction(g: f64, n: usize, s: &[f64]) -> Result<Vec<f64>> {
    let spec = GegenbauerSpectrum::new(g)?;
    GegenbauerSpectrum::check_degree(n)?;
    Ok(s.iter().map(|&x| spec.eigenfunction_at(n, x)).collect())
}

/// Coefficients of the power series in `ξ = (1 + sin s)/2` of the regular
/// solution of `K_g w = λw` divided by `cos^a`.
#[derive(Debug, Clone, Serialize)]
pub struct Recursion {
    pub coefficients: Vec<f64>,
    /// Index of the last nonzero coefficient when the series is a
    /// polynomial.
    pub terminates_at: Option<usize>,
}

pub fn recursion_coefficients(g: f64, lambda: f64, n_max: usize) -> Result<Recursion> {
    let a = exponent_a(g)?;
    let quantized = (0..=n_max).find(|&m| (lambda - (m as f64 + a).powi(2)).abs() < QUANTIZATION_TOL);
    let mut b = Vec::with_capacity(n_max + 1);
    b.push(1.0);
    for n in 0..n_max {
        let nf = n as f64;
        let next = if Some(n) == quantized || b[n] == 0.0 {
            0.0
        } else {
            ((nf + a).powi(2) - lambda) / ((nf + a + 0.5) * (nf + 1.0)) * b[n]
        };
        b.push(next);
    }
    Ok(Recursion {
        coefficients: b,
        terminates_at: quantized,
    })
}

/// A smooth test function together with its derivative.
pub trait TestFunction {
    fn value(&self, s: f64) -> f64;
    fn derivative(&self, s: f64) -> f64;

    /// Value at distance `d` inside the interval end `end`. Implementations
    /// that know their endpoint behaviour can avoid the rounding of `end ± d`.
    fn value_from_end(&self, end: f64, inward: f64, d: f64) -> f64 {
        self.value(end + inward * d)
    }

    fn derivative_from_end(&self, end: f64, inward: f64, d: f64) -> f64 {
        self.derivative(end + inward * d)
    }
}

/// `Σ c_k sin(kπ(s − lo)/(hi − lo))`, vanishing at both ends of `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct SineSeries {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
}

impl SineSeries {
    fn freq(&self) -> f64 {
        PI / (self.hi - self.lo)
    }
}

impl TestFunction for SineSeries {
    fn value(&self, s: f64) -> f64 {
        let w = self.freq();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * ((k + 1) as f64 * w * (s - self.lo)).sin())
            .sum()
    }

    fn derivative(&self, s: f64) -> f64 {
        let w = self.freq();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let f = (k + 1) as f64 * w;
                c * f * (f * (s - self.lo)).cos()
            })
            .sum()
    }
    fn value_from_end(&self, end: f64, inward: f64, d: f64) -> f64 {
        // sin(kπ(hi − d − lo)/L) = (−1)^{k+1} sin(kπd/L)
        let w = self.freq();
        let at_hi = inward < 0.0 && end == self.hi;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let v = c * ((k + 1) as f64 * w * d).sin();
                if at_hi && k % 2 == 1 {
                    -v
                } else {
                    v
                }
            })
            .sum()
    }
}

impl<F: Fn(f64) -> f64, D: Fn(f64) -> f64> TestFunction for (F, D) {
    fn value(&self, s: f64) -> f64 {
        (self.0)(s)
    }

    fn derivative(&self, s: f64) -> f64 {
        (self.1)(s)
    }
}

fn check_dirichlet(w: &impl TestFunction, lo: f64, hi: f64) -> Result<()> {
    let scale = GaussLegendre::new(16)
        .nodes
        .iter()
        .map(|x| w.value(lo + 0.5 * (x + 1.0) * (hi - lo)).abs())
        .fold(1.0, f64::max);
    for (end, inward) in [(lo, 1.0), (hi, -1.0)] {
        let v = w.value_from_end(end, inward, 0.0);
        if v.abs() > 1e-10 * scale {
            return Err(Error::BoundaryViolation(format!(
                "test function is {v} at the endpoint {end}"
            )));
        }
    }
    Ok(())
}

/// Both sides of `¼∫₀^L w²/s² ≤ ∫₀^L (w′)²` for `w(0) = w(L) = 0`.
pub fn hardy_check(w: &impl TestFunction, len: f64) -> Result<(f64, f64)> {
    if !(len > 0.0) {
        return Err(Error::OutOfRange(format!("interval length {len}")));
    }
    check_dirichlet(w, 0.0, len)?;
    let lhs = 0.25
        * tanh_sinh(0.0, len, 1e-12, |_, da, _| {
            (w.value_from_end(0.0, 1.0, da) / da).powi(2)
        })?;
    let rhs = tanh_sinh(0.0, len, 1e-12, |_, da, db| {
        if da < db {
            w.derivative_from_end(0.0, 1.0, da).powi(2)
        } else {
            w.derivative_from_end(len, -1.0, db).powi(2)
        }
    })?;
    Ok((lhs, rhs))
}

/// `∫(w′)² − ¼∫w² − ¼∫sec²·w²` over `(−π/2, π/2)`, integrated as one
/// integrand so that endpoint singularities of the three parts cancel.
pub fn sharp_quarter_form(w: &impl TestFunction) -> Result<f64> {
    check_dirichlet(w, -FRAC_PI_2, FRAC_PI_2)?;
    tanh_sinh(-FRAC_PI_2, FRAC_PI_2, 1e-11, |_, da, db| {
        let (v, dv, d) = if da < db {
            (
                w.value_from_end(-FRAC_PI_2, 1.0, da),
                w.derivative_from_end(-FRAC_PI_2, 1.0, da),
                da,
            )
        } else {
            (
                w.value_from_end(FRAC_PI_2, -1.0, db),
                w.derivative_from_end(FRAC_PI_2, -1.0, db),
                db,
            )
        };
        dv * dv - 0.25 * v * v - 0.25 * (v / d.sin()).powi(2)
    })
}

/// One row of the spectrum table.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRow {
    pub g: f64,
    pub n: usize,
    pub lambda_exact: f64,
    pub lambda_numeric: f64,
    pub abserr: f64,
}

impl SpectrumRow {
    pub fn csv_header() -> &'static str {
        "g,n,lambda_exact,lambda_numeric,abserr"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:.11e},{},{:.11e},{:.11e},{:.11e}",
            self.g, self.n, self.lambda_exact, self.lambda_numeric, self.abserr
        )
    }
}

/// Closed-form eigenvalues `n = 0..=n_max` next to extrapolated Galerkin
/// values from `basis_sizes`.
pub fn spectrum_table(g: f64, n_max: usize, basis_sizes: &[usize]) -> Result<Vec<SpectrumRow>> {
    let spec = GegenbauerSpectrum::new(g)?;
    let numeric = crate::eigensolver::dirichlet_spectrum_extrapolated(
        |_, da, db| g / da.min(db).sin().powi(2),
        basis_sizes,
        n_max + 1,
    )?;
    Ok((0..=n_max)
        .map(|n| {
            let exact = spec.eigenvalue(n);
            let num = numeric.extrapolated[n];
            SpectrumRow {
                g,
                n,
                lambda_exact: exact,
                lambda_numeric: num,
                abserr: (num - exact).abs(),
            }
        })
        .collect())
}
