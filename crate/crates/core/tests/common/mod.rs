//! Reference computations used as independent oracles by the integration
//! tests. Nothing here calls into the library's numerical kernels; the
//! quadrature comes from `gauss-quad`, the ODE integration
//! from `ode_solvers`.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use nalgebra::{DMatrix, Matrix3, Vector3};
use ode_solvers::{Dopri5, OutputType, System, Vector2, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

pub fn grid(m: usize) -> Vec<f64> {
    (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect()
}

pub fn gauss(n: usize) -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(n).unwrap())
}

/// Composite Gauss–Legendre over consecutive breakpoints.
pub fn panels(breaks: &[f64], order: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let rule = gauss(order);
    breaks.windows(2).map(|w| rule.integrate(w[0], w[1], &mut f)).sum()
}

/// Uniform split of `[a, b]` into `n` panels.
pub fn uniform_breaks(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// Recursive bisection with a 10-point against 20-point Gauss error estimate.
pub fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn go(f: &impl Fn(f64) -> f64, lo: &GaussLegendre, hi: &GaussLegendre, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let coarse = lo.integrate(a, b, f);
        let fine = hi.integrate(a, b, f);
        if (fine - coarse).abs() <= tol || depth > 30 {
            return fine;
        }
        let m = 0.5 * (a + b);
        go(f, lo, hi, a, m, 0.5 * tol, depth + 1) + go(f, lo, hi, m, b, 0.5 * tol, depth + 1)
    }
    go(f, &gauss(10), &gauss(20), a, b, tol, 0)
}

/// Trigonometric interpolant of periodic samples by a plain DFT sum.
pub struct TrigInterp {
    /// `(n, a_n, b_n)` with `f = a_0 + Σ a_n cos ns + b_n sin ns`.
    terms: Vec<(f64, f64, f64)>,
}

impl TrigInterp {
    pub fn new(f: &[f64]) -> Self {
        let m = f.len();
        let s = grid(m);
        let terms = (0..=m / 2)
            .map(|n| {
                let nf = n as f64;
                let w = if n == 0 || 2 * n == m { 1.0 } else { 2.0 };
                let a = f.iter().zip(&s).map(|(v, t)| v * (nf * t).cos()).sum::<f64>() * w / m as f64;
                let b = f.iter().zip(&s).map(|(v, t)| v * (nf * t).sin()).sum::<f64>() * w / m as f64;
                (nf, a, b)
            })
            .collect();
        Self { terms }
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.terms.iter().map(|(n, a, b)| a * (n * s).cos() + b * (n * s).sin()).sum()
    }

    /// Coefficient pairs for modes `0..`.
    pub fn terms(&self) -> &[(f64, f64, f64)] {
        &self.terms
    }
}

/// Dormand–Prince 5(4) from `s = 0` with step cap 0.05 and the stiffness
/// test disabled; the systems here are smooth and non-stiff.
macro_rules! dopri5 {
    ($f:expr, $s_end:expr, $dx:expr, $y0:expr, $rtol:expr, $out:expr) => {
        Dopri5::from_param(
            $f,
            0.0,
            $s_end,
            $dx,
            $y0,
            $rtol,
            $rtol * 1e-2,
            0.9,
            0.04,
            0.2,
            10.0,
            0.05,
            0.0,
            10_000_000,
            u32::MAX,
            $out,
        )
    };
}

/// `X″ + X = (|X|²b − (X·b)X)/|X|³` as a first-order system in `(X, X′)`.
struct ConstrainedOrbit {
    b: Vector3<f64>,
}

impl System<f64, Vector6<f64>> for ConstrainedOrbit {
    fn system(&self, _s: f64, y: &Vector6<f64>, dy: &mut Vector6<f64>) {
        let x = Vector3::new(y[0], y[1], y[2]);
        let n = x.norm();
        let force = (self.b * (n * n) - x * x.dot(&self.b)) / (n * n * n);
        for i in 0..3 {
            dy[i] = y[i + 3];
            dy[i + 3] = force[i] - x[i];
        }
    }
}

/// States `(X, X′)` of the constrained orbit equation on an equispaced
/// output grid over `[0, s_end]`, integrated by Dormand–Prince 5(4).
pub fn integrate_orbit(
    x0: Vector3<f64>,
    v0: Vector3<f64>,
    b: Vector3<f64>,
    s_end: f64,
    rtol: f64,
) -> Vec<(Vector3<f64>, Vector3<f64>)> {
    let y0 = Vector6::new(x0[0], x0[1], x0[2], v0[0], v0[1], v0[2]);
    let mut solver = dopri5!(ConstrainedOrbit { b }, s_end, s_end / 400.0, y0, rtol, OutputType::Dense);
    solver.integrate().expect("orbit integration");
    solver
        .y_out()
        .iter()
        .map(|y| (Vector3::new(y[0], y[1], y[2]), Vector3::new(y[3], y[4], y[5])))
        .collect()
}

/// `φ″ = (V − e)φ` for one period, giving the monodromy trace.
struct Hill<'a> {
    v: &'a dyn Fn(f64) -> f64,
    e: f64,
}

impl System<f64, Vector2<f64>> for Hill<'_> {
    fn system(&self, s: f64, y: &Vector2<f64>, dy: &mut Vector2<f64>) {
        dy[0] = y[1];
        dy[1] = ((self.v)(s) - self.e) * y[0];
    }
}

fn hill_end(v: &dyn Fn(f64) -> f64, e: f64, y0: Vector2<f64>) -> Vector2<f64> {
    let mut solver = dopri5!(Hill { v, e }, 2.0 * PI, 2.0 * PI, y0, 1e-13, OutputType::Sparse);
    solver.integrate().expect("hill integration");
    assert!((solver.x_out().last().unwrap() - 2.0 * PI).abs() < 1e-12);
    *solver.y_out().last().unwrap()
}

/// Trace of the monodromy matrix of `−φ″ + Vφ = eφ` over `[0, 2π]`.
pub fn monodromy_trace(v: &dyn Fn(f64) -> f64, e: f64) -> f64 {
    hill_end(v, e, Vector2::new(1.0, 0.0))[0] + hill_end(v, e, Vector2::new(0.0, 1.0))[1]
}

/// Lowest periodic eigenvalue of `−d² + V`: the first `e` above `min V` at
/// which the monodromy trace falls to 2, located by a scan then bisection.
pub fn floquet_e0(v: &dyn Fn(f64) -> f64) -> f64 {
    let vmin = (0..720).map(|i| v(2.0 * PI * i as f64 / 720.0)).fold(f64::INFINITY, f64::min);
    let mut lo = vmin - 1e-3;
    assert!(monodromy_trace(v, lo) > 2.0);
    let step = 0.02;
    let mut hi = lo + step;
    while monodromy_trace(v, hi) > 2.0 {
        lo = hi;
        hi += step;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if monodromy_trace(v, mid) > 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Cyclic tridiagonal solve of `(A − σ)x = r` where `A` is the periodic
/// second-order difference operator plus `diag(V)`, by Sherman–Morrison.
fn cyclic_solve(diag: &[f64], off: f64, r: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let thomas = |d: &[f64], rhs: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; n];
        let mut x = vec![0.0; n];
        c[0] = off / d[0];
        x[0] = rhs[0] / d[0];
        for i in 1..n {
            let den = d[i] - off * c[i - 1];
            c[i] = off / den;
            x[i] = (rhs[i] - off * x[i - 1]) / den;
        }
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        x
    };
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= off * off / gamma;
    let y = thomas(&d, r);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = off;
    let z = thomas(&d, &u);
    let vy = y[0] + off / gamma * y[n - 1];
    let vz = z[0] + off / gamma * z[n - 1];
    let f = vy / (1.0 + vz);
    y.iter().zip(&z).map(|(a, b)| a - f * b).collect()
}

/// Lowest eigenvalue of the periodic second-order finite-difference
/// discretisation of `−d² + V` on `m` points, by shifted inverse iteration.
pub fn fd_lowest(v: &dyn Fn(f64) -> f64, m: usize) -> f64 {
    let h = 2.0 * PI / m as f64;
    let s = grid(m);
    let pot: Vec<f64> = s.iter().map(|&t| v(t)).collect();
    let sigma = pot.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let diag: Vec<f64> = pot.iter().map(|p| 2.0 / (h * h) + p - sigma).collect();
    let off = -1.0 / (h * h);
    let apply = |x: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| (2.0 * x[i] - x[(i + 1) % m] - x[(i + m - 1) % m]) / (h * h) + pot[i] * x[i])
            .collect()
    };
    let mut x = vec![1.0; m];
    let mut lambda = 0.0;
    for _ in 0..200 {
        let y = cyclic_solve(&diag, off, &x);
        let norm = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        x = y.iter().map(|a| a / norm).collect();
        let ax = apply(&x);
        let next = ax.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
        if (next - lambda).abs() < 1e-14 * next.abs().max(1.0) {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// `A(s) = (I − X̂X̂ᵀ)/|X₀|` for the planar ellipse orbit, the derivative of
/// `X ↦ X/|X|` at `X₀ = (α cos s, β sin s, 0)`.
pub fn a_oracle(alpha: f64, beta: f64, s: f64) -> Matrix3<f64> {
    let x = Vector3::new(alpha * s.cos(), beta * s.sin(), 0.0);
    let n = x.norm();
    let u = x / n;
    (Matrix3::identity() - u * u.transpose()) / n
}

/// Nodes and weights of composite Gauss–Legendre over the given breaks.
pub fn composite_rule(breaks: &[f64], order: usize) -> Vec<(f64, f64)> {
    let rule = gauss(order);
    let mut out = Vec::new();
    for w in breaks.windows(2) {
        let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for &(x, wt) in rule.as_node_weight_pairs() {
            out.push((mid + half * x, half * wt));
        }
    }
    out
}

/// `I₁, I₂, I₃` as double integrals `∬ ¼|sin(s−t)| f(s) f(t)` with the kink
/// lines `t = s`, `t = s ± π` as panel edges of the inner integral.
pub fn double_quadrature_i(alpha: f64, beta: f64, outer_panels: usize, inner_panels: usize) -> [f64; 3] {
    let order = 16;
    let entries = |s: f64| {
        let a = a_oracle(alpha, beta, s);
        [a[(0, 0)], a[(0, 1)], a[(1, 1)], a[(2, 2)]]
    };
    let mut acc = [0.0; 4];
    for (s, ws) in composite_rule(&uniform_breaks(0.0, 2.0 * PI, outer_panels), order) {
        let mut kinks = vec![0.0, 2.0 * PI];
        kinks.extend([s - PI, s, s + PI].into_iter().filter(|k| *k > 0.0 && *k < 2.0 * PI));
        kinks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut breaks = vec![0.0];
        for seg in kinks.windows(2) {
            breaks.extend_from_slice(&uniform_breaks(seg[0], seg[1], inner_panels)[1..]);
        }
        let mut conv = [0.0; 4];
        for (t, wt) in composite_rule(&breaks, order) {
            let k = 0.25 * (s - t).sin().abs() * wt;
            let f = entries(t);
            for i in 0..4 {
                conv[i] += k * f[i];
            }
        }
        let f = entries(s);
        for i in 0..4 {
            acc[i] += ws * f[i] * conv[i];
        }
    }
    [acc[0] + acc[1], acc[2] + acc[1], acc[3]]
}

/// Constrained minimum of `½Σ_{n≥2}(n² − 1)|c_n|² − ½` with the zero mode
/// fixed to a unit vector and the linearized closure imposed, over real
/// Fourier modes up to `modes`; equals `η/(2(1 − η))`.
///
/// The minimizer solves a dense quadratic program: with `B₀` the constraint
/// block of the mean and `B` that of modes `≥ 2` (mode 1 costs nothing and
/// does not enter the constraint), the minimum over unit means is
/// `−½ + ½ λ_min(B₀ᵀ (B W⁻¹ Bᵀ)⁻¹ B₀)`.
pub fn brute_force_coercivity(alpha: f64, beta: f64, modes: usize) -> f64 {
    let quad_pts = 2048;
    let s = grid(quad_pts);
    let h = 2.0 * PI / quad_pts as f64;
    let a: Vec<Matrix3<f64>> = s.iter().map(|&t| a_oracle(alpha, beta, t)).collect();
    // basis functions orthonormal on [0, 2π]
    let mut cols: Vec<(f64, Box<dyn Fn(f64) -> f64>)> = Vec::new();
    for n in 2..=modes {
        let nf = n as f64;
        cols.push((nf * nf - 1.0, Box::new(move |t: f64| (nf * t).cos() / PI.sqrt())));
        cols.push((nf * nf - 1.0, Box::new(move |t: f64| (nf * t).sin() / PI.sqrt())));
    }
    let k = cols.len() * 3;
    let mut b = DMatrix::<f64>::zeros(3, k);
    let mut w_inv = vec![0.0; k];
    for (j, (w, phi)) in cols.iter().enumerate() {
        for c in 0..3 {
            let col = 3 * j + c;
            w_inv[col] = 1.0 / w;
            let mut v = Vector3::zeros();
            for (t, am) in s.iter().zip(&a) {
                v += am.column(c) * phi(*t);
            }
            for r in 0..3 {
                b[(r, col)] = v[r] * h;
            }
        }
    }
    let mut b0 = Matrix3::zeros();
    for am in &a {
        b0 += am;
    }
    b0 *= h / (2.0 * PI).sqrt();
    let g = &b * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(w_inv)) * b.transpose();
    let g = Matrix3::from_fn(|i, j| g[(i, j)]);
    let m = b0.transpose() * g.try_inverse().expect("constraint Gram matrix") * b0;
    let lmin = m.symmetric_eigen().eigenvalues.min();
    -0.5 + 0.5 * lmin
}

/// Random admissible perturbation of an ellipse orbit for the second
/// variation: Fourier modes `0..=modes` in each component with the
/// linearized closure projected away through modes `2..` only, so the mean
/// stays as drawn.
pub fn constrained_perturbation(alpha: f64, beta: f64, seed: u64, modes: usize, m: usize) -> Vec<Vector3<f64>> {
    let mut r = rng(seed);
    let s = grid(m);
    let h = 2.0 * PI / m as f64;
    let mean = Vector3::new(uniform(&mut r, -1.0, 1.0), uniform(&mut r, -1.0, 1.0), uniform(&mut r, -1.0, 1.0));
    let mut x: Vec<Vector3<f64>> = vec![mean; m];
    // on the circle the normal block of A is constant, so that direction can
    // only be corrected through the mean
    let mut shapes: Vec<Vec<Vector3<f64>>> = vec![vec![Vector3::z(); m]];
    for n in 1..=modes {
        let nf = n as f64;
        let amp = 1.0 / (nf * nf);
        let c = Vector3::from_fn(|_, _| uniform(&mut r, -amp, amp));
        let d = Vector3::from_fn(|_, _| uniform(&mut r, -amp, amp));
        for (xi, t) in x.iter_mut().zip(&s) {
            *xi += c * (nf * t).cos() + d * (nf * t).sin();
        }
        if n >= 2 {
            for comp in 0..3 {
                for trig in 0..2 {
                    shapes.push(
                        s.iter()
                            .map(|t| {
                                let f = if trig == 0 { (nf * t).cos() } else { (nf * t).sin() };
                                let mut v = Vector3::zeros();
                                v[comp] = f;
                                v
                            })
                            .collect(),
                    );
                }
            }
        }
    }
    let defect = |y: &[Vector3<f64>]| -> Vector3<f64> {
        y.iter().zip(&s).fold(Vector3::zeros(), |acc, (v, t)| acc + a_oracle(alpha, beta, *t) * v) * h
    };
    // minimum-norm correction in the span of the shapes
    let cols: Vec<Vector3<f64>> = shapes.iter().map(|sh| defect(sh)).collect();
    let bm = DMatrix::from_fn(3, cols.len(), |i, j| cols[j][i]);
    let rhs = defect(&x);
    let gram = &bm * bm.transpose();
    let y = gram.try_inverse().expect("gram") * nalgebra::DVector::from_column_slice(rhs.as_slice());
    let coef = bm.transpose() * y;
    for (j, sh) in shapes.iter().enumerate() {
        for (xi, v) in x.iter_mut().zip(sh) {
            *xi -= v * coef[j];
        }
    }
    x
}
