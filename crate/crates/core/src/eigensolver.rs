//! Low spectrum of `H = −d²/ds² + V(s)`: periodic problems on `[0, 2π)` by
//! Fourier collocation, Dirichlet problems on `(−π/2, π/2)` by a sine-basis
//! Galerkin method that tolerates inverse-square endpoint singularities.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::curve::{self, TangentField};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::spectral;

pub const MAX_DENSE_GRID: usize = 2048;

/// Potential samples on the uniform periodic grid.
#[derive(Debug, Clone)]
pub struct PeriodicOperator {
    potential: Vec<f64>,
}

impl PeriodicOperator {
    pub fn new(potential: Vec<f64>) -> Result<Self> {
        let m = potential.len();
        if m < 64 || !m.is_power_of_two() {
            return Err(Error::OutOfRange(format!(
                "grid size {m} must be a power of two >= 64"
            )));
        }
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("potential has non-finite samples".into()));
        }
        Ok(Self { potential })
    }

    pub fn grid_size(&self) -> usize {
        self.potential.len()
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// `Hφ` evaluated with the FFT.
    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        let d2 = spectral::second_derivative(phi);
        d2.iter()
            .zip(phi)
            .zip(&self.potential)
            .map(|((d, p), v)| -d + v * p)
            .collect()
    }

    /// Dense collocation matrix `−D₂ + diag(V)`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let m = self.potential.len();
        let h = 2.0 * PI / m as f64;
        let diag = PI * PI / (3.0 * h * h) + 1.0 / 6.0;
        let mut a = DMatrix::zeros(m, m);
        for j in 0..m {
            for k in 0..m {
                a[(j, k)] = if j == k {
                    diag + self.potential[j]
                } else {
                    let d = j as i64 - k as i64;
                    let sgn = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    sgn / (2.0 * (0.5 * d as f64 * h).sin().powi(2))
                };
            }
        }
        a
    }
}

/// Ordered eigenpairs with their residuals.
#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    /// Sample points of the eigenfunctions.
    pub s_grid: Vec<f64>,
    /// Eigenfunctions, unit norm in the discrete (trapezoid or Galerkin) L².
    pub eigenfunctions: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    /// Galerkin coefficients, for basis methods.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<Vec<f64>>>,
}

impl EigenResult {
    /// `λ₁ − λ₀` when at least two pairs were requested.
    pub fn gap(&self) -> Option<f64> {
        (self.eigenvalues.len() >= 2).then(|| self.eigenvalues[1] - self.eigenvalues[0])
    }
}

/// Deterministic sign: positive mean, or positive slope at the first sign
/// change when the mean vanishes.
fn fix_sign(phi: &mut [f64]) {
    let scale = phi.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let mean: f64 = phi.iter().sum::<f64>() / phi.len() as f64;
    let flip = if mean.abs() > 1e-10 * scale {
        mean < 0.0
    } else {
        let thr = 1e-8 * scale;
        let mut flip = false;
        let mut prev: Option<f64> = None;
        for &x in phi.iter() {
            if x.abs() <= thr {
                continue;
            }
            if let Some(p) = prev {
                if p.signum() != x.signum() {
                    flip = x < 0.0;
                    break;
                }
            }
            prev = Some(x);
        }
        flip
    };
    if flip {
        phi.iter_mut().for_each(|x| *x = -*x);
    }
}

fn sorted_eigen(a: DMatrix<f64>, what: &str) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let eig = SymmetricEigen::try_new(a, 1e-15, 200 * n.max(10))
        .ok_or_else(|| Error::NumericalFailure(format!("{what}: symmetric eigensolve diverged")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// First `k` eigenpairs of the periodic operator by dense eigensolve.
pub fn periodic_ground_state(op: &PeriodicOperator, k: usize) -> Result<EigenResult> {
    let m = op.grid_size();
    if k == 0 || k > m {
        return Err(Error::OutOfRange(format!("requested {k} eigenpairs on {m} points")));
    }
    if m > MAX_DENSE_GRID {
        return Err(Error::OutOfRange(format!(
            "dense solve limited to {MAX_DENSE_GRID} points, got {m}"
        )));
    }
    let (mut values, vectors) = sorted_eigen(op.matrix(), "periodic operator")?;
    let h = 2.0 * PI / m as f64;
    let mut eigenfunctions = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for i in 0..k {
        let mut phi: Vec<f64> = vectors.column(i).iter().map(|x| x / h.sqrt()).collect();
        fix_sign(&mut phi);
        let hphi = op.apply(&phi);
        // the Rayleigh quotient through the FFT operator carries less
        // roundoff than the dense eigenvalue
        let num: f64 = hphi.iter().zip(&phi).map(|(a, p)| a * p).sum();
        let den: f64 = phi.iter().map(|p| p * p).sum();
        values[i] = num / den;
        let r: f64 = hphi
            .iter()
            .zip(&phi)
            .map(|(a, p)| (a - values[i] * p).powi(2))
            .sum::<f64>()
            * h;
        residuals.push(r.sqrt());
        eigenfunctions.push(phi);
    }
    Ok(EigenResult {
        eigenvalues: values[..k].to_vec(),
        s_grid: spectral::grid(m),
        eigenfunctions,
        residuals,
        coefficients: None,
    })
}

/// Ground state by locally optimal preconditioned conjugate gradients with
/// the Fourier preconditioner `(−d² + c)⁻¹`. Used where many solves are
/// needed; agrees with the dense path to the requested residual.
pub fn periodic_ground_state_iterative(op: &PeriodicOperator, tol: f64) -> Result<(f64, Vec<f64>)> {
    let m = op.grid_size();
    let h = 2.0 * PI / m as f64;
    let v = op.potential();
    let shift = v.iter().sum::<f64>() / m as f64 + 1.0;
    let shift = shift.max(1.0);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * h;
    let normalize = |a: &mut Vec<f64>| {
        let n = dot(a, a).sqrt();
        a.iter_mut().for_each(|x| *x /= n);
    };

    let mut x = vec![1.0; m];
    normalize(&mut x);
    let mut hx = op.apply(&x);
    let mut rho = dot(&x, &hx);
    let mut p: Option<(Vec<f64>, Vec<f64>)> = None;

    for _ in 0..1000 {
        let r: Vec<f64> = hx.iter().zip(&x).map(|(a, b)| a - rho * b).collect();
        let rnorm = dot(&r, &r).sqrt();
        if rnorm <= tol * (1.0 + rho.abs()) {
            fix_sign(&mut x);
            return Ok((rho, x));
        }
        let w = spectral::apply_multiplier(&r, |n| Complex64::new(1.0 / ((n * n) as f64 + shift), 0.0));
        let hw = op.apply(&w);

        let mut basis = vec![(x.clone(), hx.clone()), (w, hw)];
        if let Some(pp) = p.take() {
            basis.push(pp);
        }
        // Gram matrix and projected operator
        let n = basis.len();
        let g = DMatrix::from_fn(n, n, |i, j| dot(&basis[i].0, &basis[j].0));
        let a = DMatrix::from_fn(n, n, |i, j| dot(&basis[i].0, &basis[j].1));
        let a = (&a + a.transpose()) * 0.5;
        // orthonormalize via Cholesky of the Gram matrix; drop p on failure
        let (coef, theta) = match ritz(&g, &a) {
            Some(v) => v,
            None => {
                let g2 = g.view((0, 0), (2, 2)).into_owned();
                let a2 = a.view((0, 0), (2, 2)).into_owned();
                basis.truncate(2);
                ritz(&g2, &a2).ok_or_else(|| {
                    Error::NumericalFailure("ground-state iteration lost orthogonality".into())
                })?
            }
        };
        let combine = |idx: &[usize]| {
            let mut y = vec![0.0; m];
            let mut hy = vec![0.0; m];
            for &i in idx {
                for j in 0..m {
                    y[j] += coef[i] * basis[i].0[j];
                    hy[j] += coef[i] * basis[i].1[j];
                }
            }
            (y, hy)
        };
        let rest: Vec<usize> = (1..basis.len()).collect();
        let (px, phx) = combine(&rest);
        let (nx, nhx) = combine(&(0..basis.len()).collect::<Vec<_>>());
        let nn = dot(&nx, &nx).sqrt();
        x = nx.iter().map(|v| v / nn).collect();
        hx = nhx.iter().map(|v| v / nn).collect();
        rho = theta;
        p = Some((px, phx));
    }
    Err(Error::NonConvergence {
        what: "ground-state iteration",
        iterations: 1000,
        residual: f64::NAN,
    })
}

/// Lowest Ritz pair of the pencil `(a, g)`.
fn ritz(g: &DMatrix<f64>, a: &DMatrix<f64>) -> Option<(Vec<f64>, f64)> {
    let chol = g.clone().cholesky()?;
    let l = chol.l();
    let linv = l.clone().try_inverse()?;
    let c = &linv * a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let (imin, theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, v)| (i, *v))?;
    let y = linv.transpose() * eig.eigenvectors.column(imin);
    if !theta.is_finite() {
        return None;
    }
    Some((y.iter().copied().collect(), theta))
}

/// Lowest eigenvalue of `H_γ = −d² + κ²` and its ground state.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub e0: f64,
    pub phi: Vec<f64>,
    pub residual: f64,
}

fn curvature_potential(u: &TangentField) -> Result<PeriodicOperator> {
    let c = curve::curvature(u);
    PeriodicOperator::new(c.curvature.iter().map(|k| k * k).collect())
}

/// `e₀(γ)` by the dense collocation solve.
pub fn e0_of_curve(u: &TangentField) -> Result<GroundState> {
    let op = curvature_potential(u)?;
    let res = periodic_ground_state(&op, 1)?;
    Ok(GroundState {
        e0: res.eigenvalues[0],
        phi: res.eigenfunctions.into_iter().next().expect("one pair"),
        residual: res.residuals[0],
    })
}

/// `e₀(γ)` by the preconditioned iteration; for optimizer inner loops.
pub fn e0_of_curve_fast(u: &TangentField) -> Result<f64> {
    let op = curvature_potential(u)?;
    periodic_ground_state_iterative(&op, 1e-10).map(|(e, _)| e)
}

/// Sine-basis Galerkin solver for `−d² + V` on `(−π/2, π/2)` with
/// Dirichlet conditions.
///
/// With `t = s + π/2` and `φ_k = √(2/π) sin(kt)`, the potential matrix is
/// `V_jk = (F_{|j−k|} − F_{j+k})/π` where
/// `F_m = ∫₀^π V (cos mt − r_m(t)) dt`, `r_m = 1` for even `m` and `cos t`
/// for odd `m`. The subtracted reference has the same double zeros at both
/// endpoints as `cos mt − cos((m±2p)t)`, so every `F_m` is finite for
/// potentials growing like the inverse square of the endpoint distance.
pub struct DirichletGalerkin {
    moments: Vec<f64>,
    max_basis: usize,
}

impl DirichletGalerkin {
    /// Moments for basis sizes up to `max_basis`. `v` receives `s` and the
    /// distances of `s` to the left and right endpoints.
    pub fn new(max_basis: usize, v: impl Fn(f64, f64, f64) -> f64) -> Result<Self> {
        if max_basis == 0 {
            return Err(Error::OutOfRange("basis size must be positive".into()));
        }
        let coarse = Self::moments(max_basis, 20, &v);
        let fine = Self::moments(max_basis, 30, &v);
        let scale = fine.iter().map(|x| x.abs()).fold(1.0, f64::max);
        let diff = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if !(diff <= 1e-10 * scale) {
            return Err(Error::QuadratureFailure(format!(
                "potential moments changed by {diff:e} under panel refinement"
            )));
        }
        Ok(Self {
            moments: fine,
            max_basis,
        })
    }

    fn moments(k: usize, order: usize, v: &impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
        let top = 2 * k + 1;
        let rule = GaussLegendre::new(order);
        // panels in the distance d to the nearer endpoint: geometric below
        // π/k, uniform of width ≈ π/k up to the midpoint
        let panel = PI / (k.max(8) as f64);
        let mut breaks = vec![0.0];
        let mut g: Vec<f64> = (1..=40).map(|i| panel * 0.5f64.powi(i)).collect();
        g.reverse();
        breaks.extend(g);
        let uniform = ((FRAC_PI_2 - panel) / panel).ceil().max(1.0) as usize;
        for i in 0..=uniform {
            breaks.push(panel + (FRAC_PI_2 - panel) * i as f64 / uniform as f64);
        }

        // kernel(π − d) equals kernel(d) for even m and −kernel(d) for odd m
        let mut f = vec![0.0; top + 1];
        let mut sines = vec![0.0; top + 2];
        for p in breaks.windows(2) {
            let c = 0.5 * (p[0] + p[1]);
            let h = 0.5 * (p[1] - p[0]);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let d = c + h * x;
                let far = PI - d;
                let left = w * h * v(d - FRAC_PI_2, d, far);
                let right = w * h * v(FRAC_PI_2 - d, far, d);
                let (even, odd) = (left + right, left - right);
                if even == 0.0 && odd == 0.0 {
                    continue;
                }
                let (sh, ch) = (0.5 * d).sin_cos();
                sines[0] = 0.0;
                sines[1] = sh;
                for n in 2..top + 2 {
                    sines[n] = 2.0 * ch * sines[n - 1] - sines[n - 2];
                }
                for (m, fm) in f.iter_mut().enumerate().skip(2) {
                    if m % 2 == 0 {
                        *fm -= 2.0 * even * sines[m] * sines[m];
                    } else {
                        *fm -= 2.0 * odd * sines[m + 1] * sines[m - 1];
                    }
                }
            }
        }
        f
    }

    pub fn max_basis(&self) -> usize {
        self.max_basis
    }

    /// Galerkin matrix `diag(k²) + V` for the first `k` sines.
    pub fn matrix(&self, k: usize) -> DMatrix<f64> {
        assert!(k <= self.max_basis);
        DMatrix::from_fn(k, k, |i, j| {
            let (a, b) = (i + 1, j + 1);
            let v = (self.moments[a.abs_diff(b)] - self.moments[a + b]) / PI;
            if i == j {
                v + (a * a) as f64
            } else {
                v
            }
        })
    }

    /// First `n_eigs` eigenpairs with basis size `k`.
    pub fn solve(&self, k: usize, n_eigs: usize) -> Result<EigenResult> {
        let n_eigs = n_eigs.min(k);
        let a = self.matrix(k);
        let (values, vectors) = sorted_eigen(a.clone(), "Dirichlet Galerkin")?;
        let samples = 513;
        let s_grid: Vec<f64> = (0..samples)
            .map(|i| -FRAC_PI_2 + PI * i as f64 / (samples - 1) as f64)
            .collect();
        let mut eigenfunctions = Vec::new();
        let mut coefficients = Vec::new();
        let mut residuals = Vec::new();
        for i in 0..n_eigs {
            let mut c: Vec<f64> = vectors.column(i).iter().copied().collect();
            let mut phi = sample_sine_series(&c, &s_grid);
            let mean: f64 = phi.iter().sum();
            if mean.abs() < 1e-10 * phi.len() as f64 {
                let mut probe = phi.clone();
                fix_sign(&mut probe);
                if probe[1] * phi[1] < 0.0 || probe != phi {
                    c.iter_mut().for_each(|x| *x = -*x);
                    phi.iter_mut().for_each(|x| *x = -*x);
                }
            } else if mean < 0.0 {
                c.iter_mut().for_each(|x| *x = -*x);
                phi.iter_mut().for_each(|x| *x = -*x);
            }
            let cv = nalgebra::DVector::from_column_slice(&c);
            let r = &a * &cv - values[i] * &cv;
            residuals.push(r.norm());
            eigenfunctions.push(phi);
            coefficients.push(c);
        }
        Ok(EigenResult {
            eigenvalues: values[..n_eigs].to_vec(),
            s_grid,
            eigenfunctions,
            residuals,
            coefficients: Some(coefficients),
        })
    }
}

/// `Σ c_k √(2/π) sin(k(s + π/2))`.
pub fn sample_sine_series(c: &[f64], s: &[f64]) -> Vec<f64> {
    let norm = (2.0 / PI).sqrt();
    s.iter()
        .map(|&x| {
            let t = x + FRAC_PI_2;
            c.iter()
                .enumerate()
                .map(|(k, ck)| ck * ((k + 1) as f64 * t).sin())
                .sum::<f64>()
                * norm
        })
        .collect()
}

/// Dirichlet spectrum of `−d² + V` on `(−π/2, π/2)` with `K` sines.
pub fn dirichlet_spectrum(
    v: impl Fn(f64, f64, f64) -> f64,
    basis_size: usize,
    n_eigs: usize,
) -> Result<EigenResult> {
    DirichletGalerkin::new(basis_size, v)?.solve(basis_size, n_eigs)
}

/// Eigenvalue estimates from a sequence of basis sizes, extrapolated by
/// Aitken's Δ² on the last three (geometric convergence in the doubling
/// index, i.e. algebraic convergence in `K`).
#[derive(Debug, Clone, Serialize)]
pub struct ExtrapolatedSpectrum {
    pub basis_sizes: Vec<usize>,
    /// `raw[i][n]`: eigenvalue `n` at basis size `basis_sizes[i]`.
    pub raw: Vec<Vec<f64>>,
    pub extrapolated: Vec<f64>,
}

pub fn dirichlet_spectrum_extrapolated(
    v: impl Fn(f64, f64, f64) -> f64,
    basis_sizes: &[usize],
    n_eigs: usize,
) -> Result<ExtrapolatedSpectrum> {
    let kmax = *basis_sizes
        .iter()
        .max()
        .ok_or_else(|| Error::OutOfRange("no basis sizes".into()))?;
    let galerkin = DirichletGalerkin::new(kmax, v)?;
    let mut raw = Vec::new();
    for &k in basis_sizes {
        let res = galerkin.solve(k, n_eigs)?;
        raw.push(res.eigenvalues);
    }
    let extrapolated = (0..n_eigs)
        .map(|n| {
            let seq: Vec<f64> = raw.iter().map(|r| r[n]).collect();
            aitken(&seq)
        })
        .collect();
    Ok(ExtrapolatedSpectrum {
        basis_sizes: basis_sizes.to_vec(),
        raw,
        extrapolated,
    })
}

/// Aitken Δ² on the last three terms; falls back to the last term when the
/// differences do not contract.
pub fn aitken(seq: &[f64]) -> f64 {
    let n = seq.len();
    let last = seq[n - 1];
    if n < 3 {
        return last;
    }
    let (a, b, c) = (seq[n - 3], seq[n - 2], seq[n - 1]);
    let d1 = b - a;
    let d2 = c - b;
    let denom = d2 - d1;
    if d1 == 0.0 || denom.abs() < 1e-300 {
        return last;
    }
    let ratio = d2 / d1;
    if !(0.0..0.95).contains(&ratio) {
        return last;
    }
    c - d2 * d2 / denom
}
