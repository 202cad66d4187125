//! Variations around collapsed orbits `cos_{αβ}(s)·e₁`, where `cos_{αβ}` is
//! `α cos s` on `[−π/2, π/2]` and `β cos s` on `[π/2, 3π/2]`.
//!
//! Integrals over the circle are split at the junctions `π/2` and `3π/2`,
//! where perturbations may have kinks.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gegenbauer::{exponent_a, TestFunction};
use crate::quadrature::{adaptive, graded_breaks, tanh_sinh, GaussLegendre};
use crate::spectral;

const JUNCTION_TOL: f64 = 1e-10;
pub const DEFAULT_BASIS: usize = 400;

/// A perturbation direction `x(s) ∈ R³` with its derivative.
pub trait VectorPerturbation {
    fn value(&self, s: f64) -> Vector3<f64>;
    fn derivative(&self, s: f64) -> Vector3<f64>;
}

impl<F, D> VectorPerturbation for (F, D)
where
    F: Fn(f64) -> Vector3<f64>,
    D: Fn(f64) -> Vector3<f64>,
{
    fn value(&self, s: f64) -> Vector3<f64> {
        (self.0)(s)
    }

    fn derivative(&self, s: f64) -> Vector3<f64> {
        (self.1)(s)
    }
}

/// `c + Σ (a_n cos ns + b_n sin ns)`.
#[derive(Debug, Clone, Default)]
pub struct TrigPerturbation {
    pub constant: Vector3<f64>,
    /// `(n, a_n, b_n)`.
    pub terms: Vec<(u32, Vector3<f64>, Vector3<f64>)>,
}

impl TrigPerturbation {
    pub fn constant(c: Vector3<f64>) -> Self {
        Self {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn with_term(mut self, n: u32, cos: Vector3<f64>, sin: Vector3<f64>) -> Self {
        self.terms.push((n, cos, sin));
        self
    }
}

impl VectorPerturbation for TrigPerturbation {
    fn value(&self, s: f64) -> Vector3<f64> {
        self.terms.iter().fold(self.constant, |acc, (n, a, b)| {
            let (sn, cs) = (*n as f64 * s).sin_cos();
            acc + a * cs + b * sn
        })
    }

    fn derivative(&self, s: f64) -> Vector3<f64> {
        self.terms.iter().fold(Vector3::zeros(), |acc, (n, a, b)| {
            let nf = *n as f64;
            let (sn, cs) = (nf * s).sin_cos();
            acc + (b * cs - a * sn) * nf
        })
    }
}

fn check_collapsed_axes(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && beta >= 0.0 && beta <= alpha && alpha.is_finite()) {
        return Err(Error::InvalidAxes { alpha, beta });
    }
    Ok(())
}

/// Position of `s` in `[−π/2, 3π/2)`.
fn unwrap_angle(s: f64) -> f64 {
    (s + FRAC_PI_2).rem_euclid(2.0 * PI) - FRAC_PI_2
}

/// `cos_{αβ}(s)`.
pub fn cos_ab(alpha: f64, beta: f64, s: f64) -> f64 {
    let t = unwrap_angle(s);
    if t < FRAC_PI_2 {
        alpha * t.cos()
    } else {
        beta * t.cos()
    }
}

/// The piecewise constant coupling `g_{αβ}`: `−β(α−β)/(α(α+β))` on the
/// right interval `[−π/2, π/2)` and `α(α−β)/(β(α+β))` on the left one.
pub fn coupling(alpha: f64, beta: f64) -> (f64, f64) {
    let right = -beta * (alpha - beta) / (alpha * (alpha + beta));
    let left = alpha * (alpha - beta) / (beta * (alpha + beta));
    (right, left)
}

#[derive(Debug, Clone, Serialize)]
pub struct CollapsedOrbit {
    pub alpha: f64,
    pub beta: f64,
    /// `cos_{αβ}` on the uniform grid; the junctions are grid points.
    pub samples: Vec<f64>,
}

impl CollapsedOrbit {
    pub fn new(alpha: f64, beta: f64, grid_size: usize) -> Result<Self> {
        check_collapsed_axes(alpha, beta)?;
        if grid_size < 8 || grid_size % 4 != 0 {
            return Err(Error::OutOfRange(format!(
                "grid size {grid_size} must be a multiple of 4"
            )));
        }
        let samples = spectral::grid(grid_size)
            .into_iter()
            .map(|s| cos_ab(alpha, beta, s))
            .collect();
        Ok(Self {
            alpha,
            beta,
            samples,
        })
    }
}

/// Composite Gauss rule on `[−π/2, π/2] ∪ [π/2, 3π/2]`, each half split
/// into `panels` pieces.
fn split_integral(panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let rule = GaussLegendre::new(20);
    let right: Vec<f64> = (0..=panels).map(|i| -FRAC_PI_2 + PI * i as f64 / panels as f64).collect();
    let left: Vec<f64> = right.iter().map(|x| x + PI).collect();
    rule.integrate_panels(&right, &f) + rule.integrate_panels(&left, &f)
}

/// `½∫(|x′|² − |x|²)` over the circle.
pub fn quadratic_functional(x: &impl VectorPerturbation) -> f64 {
    0.5 * split_integral(32, |s| x.derivative(s).norm_squared() - x.value(s).norm_squared())
}

/// `𝓛₁ = −(α−β)(x₁(π/2) + x₁(3π/2))`, first components.
pub fn first_variation(alpha: f64, beta: f64, x1: &impl VectorPerturbation) -> Result<f64> {
    check_collapsed_axes(alpha, beta)?;
    Ok(-(alpha - beta) * (x1.value(FRAC_PI_2)[0] + x1.value(1.5 * PI)[0]))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SignConstrainedL1 {
    /// `μ𝓛₁` per unit `|μ|`.
    pub mu_l1: f64,
    /// Whether the leading term of the first closure component vanishes.
    pub admissible: bool,
    /// Leading coefficient of `|μ|` in the first closure component.
    pub constraint_residual: f64,
}

/// `μ𝓛₁` after the first closure component has been used to eliminate
/// `x₁(π/2) + x₁(3π/2)`.
///
/// For `β > 0` the leading closure term is
/// `σ(1/α + 1/β)S − (1/α − 1/β)N` with `S` the sum of first components and
/// `N` the sum of norms at the junctions, and `μ𝓛₁ = |μ|(α−β)²/(α+β)·N`.
/// For `β = 0` the left interval forces `σx₁ ≤ 0` at both junctions and
/// vanishing transverse components on `[π/2, 3π/2]`; anything else is a
/// `ConstraintViolation`.
pub fn sign_constrained_l1(
    alpha: f64,
    beta: f64,
    x1: &impl VectorPerturbation,
    mu_sign: f64,
) -> Result<SignConstrainedL1> {
    check_collapsed_axes(alpha, beta)?;
    if mu_sign != 1.0 && mu_sign != -1.0 {
        return Err(Error::InvalidInput(format!("mu_sign must be +1 or -1, got {mu_sign}")));
    }
    let (p, q) = (x1.value(FRAC_PI_2), x1.value(1.5 * PI));
    let sum = p[0] + q[0];
    let norms = p.norm() + q.norm();
    if beta == 0.0 {
        let scale = 1.0 + p.norm().max(q.norm());
        if mu_sign * p[0] > JUNCTION_TOL * scale || mu_sign * q[0] > JUNCTION_TOL * scale {
            return Err(Error::ConstraintViolation(
                "sigma*x1 must be nonpositive at both junctions when beta = 0".into(),
            ));
        }
        let rule = GaussLegendre::new(20);
        let nodes = rule.composite_points(&(0..=16).map(|i| FRAC_PI_2 + PI * i as f64 / 16.0).collect::<Vec<_>>());
        let transverse = nodes
            .0
            .iter()
            .map(|&s| {
                let v = x1.value(s);
                v[1].abs().max(v[2].abs())
            })
            .fold(0.0, f64::max);
        if transverse > JUNCTION_TOL * scale {
            return Err(Error::ConstraintViolation(
                "transverse components must vanish on [pi/2, 3pi/2] when beta = 0".into(),
            ));
        }
        return Ok(SignConstrainedL1 {
            mu_l1: -alpha * mu_sign * sum,
            admissible: true,
            constraint_residual: 0.0,
        });
    }
    let residual = mu_sign * (1.0 / alpha + 1.0 / beta) * sum - (1.0 / alpha - 1.0 / beta) * norms;
    let scale = (1.0 / alpha + 1.0 / beta) * (1.0 + norms);
    Ok(SignConstrainedL1 {
        mu_l1: (alpha - beta).powi(2) / (alpha + beta) * norms,
        admissible: residual.abs() <= 1e-10 * scale,
        constraint_residual: residual,
    })
}

/// `𝓛₂ = ½∫(|x₁′|² − |x₁|²) − (α−β)(x₂(π/2) + x₂(3π/2))`.
pub fn second_variation_collapsed(
    alpha: f64,
    beta: f64,
    x1: &impl VectorPerturbation,
    x2: &impl VectorPerturbation,
) -> Result<f64> {
    check_collapsed_axes(alpha, beta)?;
    Ok(quadratic_functional(x1) - (alpha - beta) * (x2.value(FRAC_PI_2)[0] + x2.value(1.5 * PI)[0]))
}

fn check_junctions(x: &impl VectorPerturbation) -> Result<()> {
    for s in [FRAC_PI_2, 1.5 * PI] {
        let v = x.value(s);
        if v.norm() > JUNCTION_TOL * (1.0 + x.value(0.0).norm()) {
            return Err(Error::BoundaryViolation(format!(
                "perturbation is {:?} at the junction {s}",
                v.as_slice()
            )));
        }
    }
    Ok(())
}

/// `∫ sign(cos s)(y₁² + z₁²)/cos²_{αβ}` over the circle.
pub fn transverse_sec2_integral(alpha: f64, beta: f64, x1: &impl VectorPerturbation) -> Result<f64> {
    check_collapsed_axes(alpha, beta)?;
    if beta == 0.0 {
        return Err(Error::InvalidAxes { alpha, beta });
    }
    let right = sec2_transverse(x1, -FRAC_PI_2);
    let left = sec2_transverse(x1, FRAC_PI_2);
    Ok(right / (alpha * alpha) - left / (beta * beta))
}

/// `∫ (y² + z²)/cos²` over `[lo, lo + π]` on graded panels.
fn sec2_transverse(x: &impl VectorPerturbation, lo: f64) -> f64 {
    let rule = GaussLegendre::new(20);
    let breaks = graded_breaks(lo, lo + PI, 24, 0.35, 8);
    rule.integrate_panels(&breaks, |s| {
        let v = x.value(s);
        (v[1] * v[1] + v[2] * v[2]) / s.cos().powi(2)
    })
}

/// The reduced second variation after eliminating the junction sum of the
/// second-order term through the second-order first closure component:
/// `½∫{|x₁′|² − |x₁|² + g_{αβ}sec²(y₁² + z₁²)} + (α−β)²/(α+β)·N₂`, with
/// `N₂ = |x₂(π/2)| + |x₂(3π/2)|`. Requires `x₁` to vanish at the junctions.
pub fn reduced_second_variation(
    alpha: f64,
    beta: f64,
    x1: &impl VectorPerturbation,
    x2: &impl VectorPerturbation,
) -> Result<f64> {
    check_collapsed_axes(alpha, beta)?;
    if beta == 0.0 {
        return Err(Error::InvalidAxes { alpha, beta });
    }
    check_junctions(x1)?;
    let (g_right, g_left) = coupling(alpha, beta);
    let sec2 = g_right * sec2_transverse(x1, -FRAC_PI_2) + g_left * sec2_transverse(x1, FRAC_PI_2);
    let n2 = x2.value(FRAC_PI_2).norm() + x2.value(1.5 * PI).norm();
    Ok(quadratic_functional(x1) + 0.5 * sec2 + (alpha - beta).powi(2) / (alpha + beta) * n2)
}

/// `∫{(w′)² + g_{αβ}sec² w²}` over the circle for `w` vanishing at the
/// junctions. `w` is given on `[−π/2, 3π/2]`.
pub fn reduced_form(alpha: f64, beta: f64, w: &impl TestFunction) -> Result<f64> {
    check_collapsed_axes(alpha, beta)?;
    if beta == 0.0 {
        return Err(Error::InvalidAxes { alpha, beta });
    }
    let scale = 1.0 + w.value(0.0).abs().max(w.value(PI).abs());
    for (end, inward) in [(-FRAC_PI_2, 1.0), (FRAC_PI_2, -1.0), (FRAC_PI_2, 1.0), (1.5 * PI, -1.0)] {
        let v = w.value_from_end(end, inward, 0.0);
        if v.abs() > JUNCTION_TOL * scale {
            return Err(Error::BoundaryViolation(format!("w = {v} at the junction {end}")));
        }
    }
    let (g_right, g_left) = coupling(alpha, beta);
    let mut total = 0.0;
    for (lo, g) in [(-FRAC_PI_2, g_right), (FRAC_PI_2, g_left)] {
        let hi = lo + PI;
        total += tanh_sinh(lo, hi, 1e-12, |_, da, db| {
            let (v, dv, d) = if da < db {
                (w.value_from_end(lo, 1.0, da), w.derivative_from_end(lo, 1.0, da), da)
            } else {
                (w.value_from_end(hi, -1.0, db), w.derivative_from_end(hi, -1.0, db), db)
            };
            dv * dv + g * (v / d.sin()).powi(2)
        })?;
    }
    Ok(total)
}

/// Galerkin matrix of `−d² + g sec²` on one interval in the normalized sine
/// basis. The potential part is exact: `∫ sec² φ_j φ_k = 2 min(j, k)` for
/// `j ≡ k (mod 2)` and zero otherwise.
pub fn interval_matrix(g: f64, basis: usize) -> DMatrix<f64> {
    DMatrix::from_fn(basis, basis, |i, j| {
        let (p, q) = (i + 1, j + 1);
        let pot = if (p + q) % 2 == 0 { 2.0 * g * p.min(q) as f64 } else { 0.0 };
        if i == j {
            pot + (p * p) as f64
        } else {
            pot
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstrainedSpectrumResult {
    pub alpha: f64,
    pub beta: f64,
    pub basis_per_interval: usize,
    /// Critical values of the constrained problem, ascending.
    pub eta_values: Vec<f64>,
    /// `‖P(K − 1)w₀‖ / ‖w₀‖` for `w₀ = cos_{αβ}` in the Galerkin space.
    pub w0_check: f64,
    /// `|⟨v₀, w₀⟩|/‖w₀‖` for the lowest constrained eigenvector `v₀`.
    pub w0_correlation: f64,
    /// Galerkin `(λ₀, λ₁)` of the unconstrained operator.
    pub lambda_bounds: (f64, f64),
    /// Closed-form `(λ₀, λ₁)` from the two interval spectra.
    pub lambda_exact: (f64, f64),
    pub coupling: (f64, f64),
}

/// Critical values of `∫(w′² + g_{αβ}sec² w²)` on `‖w‖ = 1`,
/// `∫w/|cos_{αβ}| = 0`, i.e. eigenvalues of `PKP`.
pub fn constrained_spectrum(alpha: f64, beta: f64, n_eigs: usize, basis: usize) -> Result<ConstrainedSpectrumResult> {
    check_collapsed_axes(alpha, beta)?;
    if beta == 0.0 {
        return Err(Error::InvalidAxes { alpha, beta });
    }
    if basis < 2 {
        return Err(Error::OutOfRange("basis size must be at least 2".into()));
    }
    let (g_right, g_left) = coupling(alpha, beta);
    let n = 2 * basis;
    let mut k = DMatrix::zeros(n, n);
    k.view_mut((0, 0), (basis, basis)).copy_from(&interval_matrix(g_right, basis));
    k.view_mut((basis, basis), (basis, basis)).copy_from(&interval_matrix(g_left, basis));

    // ⟨φ_k, 1/|cos_{αβ}|⟩ = √(2/π)·π/α (right) or /β (left) for odd k
    let amp = (2.0 / PI).sqrt() * PI;
    let c = DVector::from_fn(n, |i, _| {
        let (idx, scale) = if i < basis { (i, 1.0 / alpha) } else { (i - basis, 1.0 / beta) };
        if idx % 2 == 0 {
            amp * scale
        } else {
            0.0
        }
    });
    let c_norm = c.norm();
    if !(c_norm.is_finite() && c_norm > 0.0) {
        return Err(Error::ProjectionIllConditioned(format!("constraint vector norm {c_norm}")));
    }
    let u = &c / c_norm;

    // orthonormal basis of the complement of u by a Householder reflection
    let mut v = u.clone();
    let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += sign;
    let vn = v.norm_squared();
    let h = DMatrix::identity(n, n) - &v * v.transpose() * (2.0 / vn);
    let q = h.columns(1, n - 1).into_owned();
    let reduced = q.transpose() * &k * &q;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(reduced, 1e-15, 100 * n)
        .ok_or_else(|| Error::NumericalFailure("constrained eigensolve diverged".into()))?;
    let mut order: Vec<usize> = (0..n - 1).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eta_values: Vec<f64> = order.iter().take(n_eigs.max(2)).map(|&i| eig.eigenvalues[i]).collect();

    // w₀ = cos_{αβ}: α√(π/2)e₁ on the right block, −β√(π/2)e₁ on the left
    let mut w0 = DVector::zeros(n);
    w0[0] = alpha * (PI / 2.0).sqrt();
    w0[basis] = -beta * (PI / 2.0).sqrt();
    let r = &k * &w0 - &w0;
    let pr = &r - &u * u.dot(&r);
    let w0_check = pr.norm() / w0.norm();
    let v0 = &q * eig.eigenvectors.column(order[0]);
    let w0_correlation = v0.dot(&w0).abs() / (v0.norm() * w0.norm());

    let mut unconstrained: Vec<f64> = SymmetricEigen::new(k).eigenvalues.iter().copied().collect();
    unconstrained.sort_by(f64::total_cmp);
    let (a_r, a_l) = (exponent_a(g_right)?, exponent_a(g_left)?);
    let mut exact: Vec<f64> = (0..2).flat_map(|m| [(m as f64 + a_r).powi(2), (m as f64 + a_l).powi(2)]).collect();
    exact.sort_by(f64::total_cmp);

    Ok(ConstrainedSpectrumResult {
        alpha,
        beta,
        basis_per_interval: basis,
        eta_values: eta_values.into_iter().take(n_eigs.max(1)).collect(),
        w0_check,
        w0_correlation,
        lambda_bounds: (unconstrained[0], unconstrained[1]),
        lambda_exact: (exact[0], exact[1]),
        coupling: (g_right, g_left),
    })
}

/// One row of an expansion-lemma table.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionRow {
    pub component: usize,
    pub mu: f64,
    pub direct: f64,
    pub predicted: f64,
    pub residual: f64,
    /// Residual divided by the order of the leading correction.
    pub residual_over_power: f64,
}

impl ExpansionRow {
    pub fn csv_header() -> &'static str {
        "component,mu,direct,predicted,residual,residual_over_power"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}",
            self.component, self.mu, self.direct, self.predicted, self.residual, self.residual_over_power
        )
    }
}

/// Points in `[−π/2, π/2]` where the integrand changes character: scale
/// breaks around both ends and sign changes of the first component.
fn lemma_breaks(scale: f64, first: &impl Fn(f64) -> f64) -> Vec<f64> {
    let mut pts = Vec::new();
    for end in [-FRAC_PI_2, FRAC_PI_2] {
        let inward = -end.signum();
        for k in [0.01, 0.1, 0.3, 1.0, 3.0, 10.0, 100.0] {
            let d = k * scale;
            if d < 1.0 {
                pts.push(end + inward * d);
            }
        }
        // sign changes within 200·scale of the end
        let reach = (200.0 * scale).min(1.0);
        let steps = 400;
        let mut prev = (end + inward * 1e-300, first(end));
        for i in 1..=steps {
            let x = end + inward * reach * i as f64 / steps as f64;
            let fx = first(x);
            if fx.signum() != prev.1.signum() && prev.1 != 0.0 {
                let (mut a, mut b) = (prev.0, x);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if first(m).signum() == first(a).signum() {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                let root = 0.5 * (a + b);
                pts.push(root);
                // the transition across the root can be far narrower than the scale
                let mut w = scale;
                while w > 1e-15 {
                    pts.push(root - w);
                    pts.push(root + w);
                    w *= 0.25;
                }
            }
            prev = (x, fx);
        }
    }
    pts
}

/// `∫_{−π/2}^{π/2} X/|X|` for `X = α cos s·e₁ + v(s)`, split as
/// `π sign(α)` plus a deficit evaluated without cancellation.
fn direct_integrals(alpha: f64, perturb: &impl Fn(f64) -> Vector3<f64>, scale: f64) -> Result<Vector3<f64>> {
    let field = |s: f64| Vector3::new(alpha * s.cos(), 0.0, 0.0) + perturb(s);
    let first = |s: f64| field(s)[0];
    let breaks = lemma_breaks(scale, &first);
    let sgn = alpha.signum();
    let deficit = adaptive(-FRAC_PI_2, FRAC_PI_2, &breaks, 1e-15, 1e-13, |s| {
        let x = field(s);
        let n = x.norm();
        if n == 0.0 {
            return -1.0;
        }
        let along = sgn * x[0];
        if along > 0.0 {
            -(x[1] * x[1] + x[2] * x[2]) / (n * (along + n))
        } else {
            along / n - 1.0
        }
    })?;
    let mut out = Vector3::new(sgn * (PI + deficit), 0.0, 0.0);
    for c in 1..3 {
        out[c] = adaptive(-FRAC_PI_2, FRAC_PI_2, &breaks, 1e-15, 1e-12, |s| {
            let x = field(s);
            let n = x.norm();
            if n == 0.0 {
                0.0
            } else {
                x[c] / n
            }
        })?;
    }
    Ok(out)
}

/// Direct quadrature of the closure integrals over `[−π/2, π/2]` for
/// `X = α cos·e₁ + μx₁` against the first-order expansion. The first
/// component is compared with
/// `π sign α + (μ/|α|)(x₁(−π/2)+x₁(π/2)) − (|μ|/α)(|x₁(−π/2)|+|x₁(π/2)|)`
/// (residual over `|μ|`); the transverse ones with the logarithmic law
/// `(μ/|α|) ln(1/|μ|)(y₁(−π/2)+y₁(π/2))` (residual over `|μ| ln(1/|μ|)`).
pub fn lemma41_check(alpha: f64, x1: &impl VectorPerturbation, mus: &[f64]) -> Result<Vec<ExpansionRow>> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::InvalidInput("alpha must be nonzero".into()));
    }
    let (lo, hi) = (x1.value(-FRAC_PI_2), x1.value(FRAC_PI_2));
    let mut rows = Vec::new();
    for &mu in mus {
        check_mu(mu)?;
        let v = |s: f64| x1.value(s) * mu;
        let direct = direct_integrals(alpha, &v, mu.abs() * (1.0 + lo.norm().max(hi.norm())) / alpha.abs())?;
        let log = (1.0 / mu.abs()).ln();
        for c in 0..3 {
            let (predicted, power) = if c == 0 {
                (
                    PI * alpha.signum() + mu / alpha.abs() * (lo[0] + hi[0]) - mu.abs() / alpha * (lo.norm() + hi.norm()),
                    mu.abs(),
                )
            } else {
                (mu / alpha.abs() * log * (lo[c] + hi[c]), mu.abs() * log)
            };
            let residual = direct[c] - predicted;
            rows.push(ExpansionRow {
                component: c,
                mu,
                direct: direct[c],
                predicted,
                residual,
                residual_over_power: residual / power,
            });
        }
    }
    Ok(rows)
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu != 0.0 && mu.abs() <= 0.1) {
        return Err(Error::OutOfRange(format!("mu = {mu} must be nonzero with |mu| <= 0.1")));
    }
    Ok(())
}

/// Second-order counterpart for `X = α cos·e₁ + μx₁ + μ²x₂` with `x₁`
/// vanishing at `±π/2`. First component against
/// `π sign α + (μ²/|α|)(x₂(−π/2)+x₂(π/2)) − (μ²/α)(|x₂(−π/2)|+|x₂(π/2)|)
///  − sign(α)(μ²/2α²)∫sec²(y₁²+z₁²)` (residual over `μ²`); transverse
/// components against `(μ/|α|)∫y₁/|cos|` (residual over `|μ|`).
pub fn lemma42_check(
    alpha: f64,
    x1: &impl VectorPerturbation,
    x2: &impl VectorPerturbation,
    mus: &[f64],
) -> Result<Vec<ExpansionRow>> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::InvalidInput("alpha must be nonzero".into()));
    }
    for end in [-FRAC_PI_2, FRAC_PI_2] {
        if x1.value(end).norm() > JUNCTION_TOL * (1.0 + x1.value(0.0).norm()) {
            return Err(Error::BoundaryViolation(format!("x1 does not vanish at {end}")));
        }
    }
    let (lo, hi) = (x2.value(-FRAC_PI_2), x2.value(FRAC_PI_2));
    let sec2 = sec2_transverse(x1, -FRAC_PI_2);
    let rule = GaussLegendre::new(20);
    let breaks = graded_breaks(-FRAC_PI_2, FRAC_PI_2, 24, 0.35, 8);
    let weighted: Vec<f64> = (1..3)
        .map(|c| rule.integrate_panels(&breaks, |s| x1.value(s)[c] / s.cos()))
        .collect();
    let mut rows = Vec::new();
    for &mu in mus {
        check_mu(mu)?;
        let mu2 = mu * mu;
        let v = |s: f64| x1.value(s) * mu + x2.value(s) * mu2;
        let reach = mu2 * (1.0 + lo.norm().max(hi.norm())) + mu.abs() * x1.derivative(FRAC_PI_2).norm().max(x1.derivative(-FRAC_PI_2).norm());
        let direct = direct_integrals(alpha, &v, reach.max(mu2) / alpha.abs())?;
        for c in 0..3 {
            let (predicted, power) = if c == 0 {
                (
                    PI * alpha.signum() + mu2 / alpha.abs() * (lo[0] + hi[0])
                        - mu2 / alpha * (lo.norm() + hi.norm())
                        - alpha.signum() * mu2 / (2.0 * alpha * alpha) * sec2,
                    mu2,
                )
            } else {
                (mu / alpha.abs() * weighted[c - 1], mu.abs())
            };
            let residual = direct[c] - predicted;
            rows.push(ExpansionRow {
                component: c,
                mu,
                direct: direct[c],
                predicted,
                residual,
                residual_over_power: residual / power,
            });
        }
    }
    Ok(rows)
}

fn v3(x: f64, y: f64, z: f64) -> Vector3<f64> {
    Vector3::new(x, y, z)
}

/// Five generic directions for the first-order expansion. Each has nonzero
/// junction sums in every component.
pub fn first_order_directions() -> Vec<TrigPerturbation> {
    let z = Vector3::zeros();
    vec![
        TrigPerturbation::constant(v3(0.3, 0.2, -0.1)).with_term(1, v3(0.1, 0.4, 0.2), v3(0.5, -0.3, 0.1)),
        TrigPerturbation::constant(v3(-0.5, 0.1, 0.3)).with_term(1, z, v3(0.2, 0.6, 0.0)),
        TrigPerturbation::constant(v3(0.0, 0.5, 0.0)).with_term(2, v3(0.2, 0.0, 0.3), z),
        TrigPerturbation::constant(v3(0.4, -0.4, 0.2)).with_term(3, z, v3(0.1, 0.2, 0.3)),
        TrigPerturbation::constant(v3(-0.2, 0.25, -0.6))
            .with_term(1, v3(0.3, 0.3, 0.0), z)
            .with_term(2, z, v3(0.0, 0.1, -0.2)),
    ]
}

/// Five `(x₁, x₂)` pairs for the second-order expansion; every `x₁` is
/// built from `cos s`, `cos 3s` and `sin 2s` and so vanishes at `±π/2`.
pub fn second_order_directions() -> Vec<(TrigPerturbation, TrigPerturbation)> {
    let z = Vector3::zeros();
    let none = TrigPerturbation::default;
    vec![
        (none().with_term(1, v3(0.0, 1.0, 0.0), z), TrigPerturbation::constant(v3(1.0, 0.0, 0.0))),
        (none().with_term(1, v3(0.0, 1.0, 0.0), z), TrigPerturbation::constant(v3(-1.0, 0.0, 0.0))),
        (
            none()
                .with_term(1, v3(0.2, 0.5, -0.3), z)
                .with_term(3, v3(0.0, 0.2, 0.1), z)
                .with_term(2, z, v3(0.1, -0.4, 0.3)),
            TrigPerturbation::constant(v3(0.3, 0.2, 0.0)).with_term(1, v3(0.0, 0.0, 0.5), z),
        ),
        (
            none().with_term(2, z, v3(0.0, 0.6, 0.2)).with_term(1, v3(0.0, 0.0, 0.4), z),
            TrigPerturbation::constant(v3(-0.4, 0.1, 0.2)).with_term(1, z, v3(0.3, 0.0, 0.0)),
        ),
        (
            none().with_term(3, v3(0.3, 0.3, -0.5), z).with_term(1, v3(0.0, 0.7, 0.0), z),
            TrigPerturbation::constant(v3(0.2, -0.3, 0.1)).with_term(2, v3(-0.6, 0.0, 0.0), z),
        ),
    ]
}

/// Largest value of `|x(s) − x(t)| / (‖x′‖₂ |s − t|^{1/2})` over all grid
/// pairs, with `|s − t|` the shorter arc; at most 1 for `H¹` functions.
pub fn holder_ratio(samples: &[f64]) -> f64 {
    let m = samples.len();
    let dx = spectral::derivative(samples);
    let norm = spectral::trapezoid(&dx.iter().map(|d| d * d).collect::<Vec<_>>()).sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    let h = 2.0 * PI / m as f64;
    let mut worst: f64 = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            let k = (j - i).min(m - (j - i));
            let ratio = (samples[i] - samples[j]).abs() / (norm * (k as f64 * h).sqrt());
            worst = worst.max(ratio);
        }
    }
    worst
}
