//! Numerical search for loops with `e₀ < 1`, distance to the family of
//! ellipse tangents, and second-order scans around family members.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{self, project_to_admissible, CurveFile, TangentField};
use crate::eigensolver::{e0_of_curve, e0_of_curve_fast};
use crate::error::{Error, Result};
use crate::spectral;

/// Best values below this are reported as conjecture violations.
pub const VIOLATION_MARGIN: f64 = 1e-6;
/// Floor below which a result indicates a solver defect.
pub const FLOOR: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    /// Highest Fourier mode of the perturbation parameters.
    pub modes: usize,
    pub max_evaluations: usize,
    pub initial_step: f64,
    pub min_step: f64,
    pub step_shrink: f64,
    /// Improvement required for a trial step to be accepted.
    pub accept_tol: f64,
    pub seed: u64,
    pub amplitude: f64,
    /// Additional pattern-search passes from the best point.
    pub restarts: usize,
    pub family_metric: FamilyMetric,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            modes: 6,
            max_evaluations: 5000,
            initial_step: 0.05,
            min_step: 1e-5,
            step_shrink: 0.5,
            accept_tol: 1e-10,
            seed: 0,
            amplitude: 0.2,
            restarts: 1,
            family_metric: FamilyMetric::default(),
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.modes >= 2
            && self.max_evaluations > 0
            && self.initial_step > 0.0
            && self.min_step > 0.0
            && self.min_step <= self.initial_step
            && self.step_shrink > 0.0
            && self.step_shrink < 1.0
            && self.accept_tol >= 0.0
            && (0.0..=0.5).contains(&self.amplitude);
        if !ok {
            return Err(Error::InvalidInput(format!("invalid probe configuration {self:?}")));
        }
        self.family_metric.validate()
    }
}

/// Search parameters for the distance to the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FamilyMetric {
    pub ratio_samples: usize,
    pub phase_samples: usize,
    pub restarts: usize,
    pub simplex_iterations: usize,
}

impl Default for FamilyMetric {
    fn default() -> Self {
        Self {
            ratio_samples: 20,
            phase_samples: 64,
            restarts: 3,
            simplex_iterations: 200,
        }
    }
}

impl FamilyMetric {
    fn validate(&self) -> Result<()> {
        if self.ratio_samples < 2 || self.phase_samples < 4 || self.restarts == 0 {
            return Err(Error::InvalidInput(format!("invalid family metric {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeStatus {
    Converged,
    EvaluationCap,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyFit {
    pub distance: f64,
    /// `β/α` of the closest member.
    pub ratio: f64,
    pub phase: f64,
    pub rotation: [[f64; 3]; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub seed: u64,
    pub config: ProbeConfig,
    pub start_e0: f64,
    pub best_e0: f64,
    /// Best value after each full coordinate sweep; non-increasing.
    pub e0_history: Vec<f64>,
    pub evaluations: usize,
    pub accepted_steps: usize,
    pub status: ProbeStatus,
    pub final_field: CurveFile,
    pub family: FamilyFit,
    pub violation_flag: bool,
    /// Best value lies under the proven floor of one half.
    pub floor_violation: bool,
}

/// Unit circle tangent plus seeded Fourier noise of sup-norm `amplitude`,
/// projected onto admissible fields.
pub fn random_curve(seed: u64, modes: usize, amplitude: f64) -> Result<TangentField> {
    if !(0.0..=0.5).contains(&amplitude) {
        return Err(Error::OutOfRange(format!("amplitude {amplitude} outside [0, 0.5]")));
    }
    if modes < 1 {
        return Err(Error::OutOfRange("at least one mode is required".into()));
    }
    let m = curve::grid_size(modes);
    let s = spectral::grid(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = vec![Vector3::zeros(); m];
    for n in 0..=modes {
        let a = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let b = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        for (x, &sj) in noise.iter_mut().zip(&s) {
            let (sn, cs) = (n as f64 * sj).sin_cos();
            *x += a * cs + b * sn;
        }
    }
    let sup = noise.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let scale = if sup > 0.0 { amplitude / sup } else { 0.0 };
    let raw: Vec<Vector3<f64>> = s
        .iter()
        .zip(&noise)
        .map(|(&sj, v)| Vector3::new(sj.cos(), sj.sin(), 0.0) + v * scale)
        .collect();
    project_to_admissible(&raw, modes)
}

/// Perturbation basis: `e_c cos ns`, `e_c sin ns` for `n ≤ modes`.
struct Basis {
    columns: Vec<Vec<f64>>,
    component: Vec<usize>,
}

impl Basis {
    fn new(m: usize, modes: usize) -> Self {
        let s = spectral::grid(m);
        let mut columns = Vec::new();
        let mut component = Vec::new();
        for n in 0..=modes {
            for c in 0..3 {
                columns.push(s.iter().map(|&x| (n as f64 * x).cos()).collect());
                component.push(c);
                if n > 0 {
                    columns.push(s.iter().map(|&x| (n as f64 * x).sin()).collect());
                    component.push(c);
                }
            }
        }
        Self { columns, component }
    }

    fn field(&self, base: &[Vector3<f64>], params: &[f64], modes: usize) -> Result<TangentField> {
        let mut raw = base.to_vec();
        for ((col, &c), &p) in self.columns.iter().zip(&self.component).zip(params) {
            if p != 0.0 {
                for (x, v) in raw.iter_mut().zip(col) {
                    x[c] += p * v;
                }
            }
        }
        project_to_admissible(&raw, modes)
    }
}

/// Coordinate pattern search over additive Fourier perturbations of the
/// start field, re-projecting after every trial step.
pub fn minimize_e0(start: &TangentField, cfg: &ProbeConfig) -> Result<ProbeRecord> {
    cfg.validate()?;
    let m = start.grid_size();
    let modes = cfg.modes.min(m / 4 - 1);
    let basis = Basis::new(m, modes);
    let base = start.samples().to_vec();
    let mut params = vec![0.0; basis.columns.len()];

    let start_e0 = e0_of_curve_fast(start)?;
    let mut best = start_e0;
    let mut best_field = start.clone();
    let mut history = vec![best];
    let mut evaluations = 1;
    let mut accepted = 0;
    let mut status = ProbeStatus::Converged;

    'passes: for _ in 0..=cfg.restarts {
        let mut step = cfg.initial_step;
        while step >= cfg.min_step {
            let mut improved = false;
            for i in 0..params.len() {
                for dir in [1.0, -1.0] {
                    if evaluations >= cfg.max_evaluations {
                        status = ProbeStatus::EvaluationCap;
                        break 'passes;
                    }
                    let mut trial = params.clone();
                    trial[i] += dir * step;
                    evaluations += 1;
                    // trial points the projection cannot handle are rejected
                    let Ok(field) = basis.field(&base, &trial, modes) else {
                        continue;
                    };
                    let Ok(e) = e0_of_curve_fast(&field) else {
                        continue;
                    };
                    if e < best - cfg.accept_tol {
                        best = e;
                        params = trial;
                        best_field = field;
                        accepted += 1;
                        improved = true;
                        break;
                    }
                }
            }
            history.push(best);
            if !improved {
                step *= cfg.step_shrink;
            }
        }
    }

    let family = family_distance(&best_field, &cfg.family_metric)?;
    Ok(ProbeRecord {
        seed: cfg.seed,
        config: cfg.clone(),
        start_e0,
        best_e0: best,
        e0_history: history,
        evaluations,
        accepted_steps: accepted,
        status,
        final_field: CurveFile::from_field(&best_field, best_field.grid_size() / 4 - 1),
        family,
        violation_flag: best < 1.0 - VIOLATION_MARGIN,
        floor_violation: best < FLOOR - VIOLATION_MARGIN,
    })
}

/// One probe from `random_curve(cfg.seed, cfg.modes, cfg.amplitude)`.
pub fn run_probe(cfg: &ProbeConfig) -> Result<ProbeRecord> {
    let start = random_curve(cfg.seed, cfg.modes, cfg.amplitude)?;
    minimize_e0(&start, cfg)
}

/// Thread count for probe batteries: `LOOPSPEC_THREADS` if set, otherwise
/// the available parallelism.
pub fn probe_threads() -> usize {
    std::env::var("LOOPSPEC_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Probes for each seed, run concurrently and returned in seed order.
pub fn probe_battery(seeds: &[u64], cfg: &ProbeConfig) -> Result<Vec<ProbeRecord>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(probe_threads())
        .build()
        .map_err(|e| Error::NumericalFailure(format!("thread pool: {e}")))?;
    let mut out: Vec<(u64, ProbeRecord)> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let cfg = ProbeConfig { seed, ..cfg.clone() };
                run_probe(&cfg).map(|r| (seed, r))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    out.sort_by_key(|(seed, _)| *seed);
    Ok(out.into_iter().map(|(_, r)| r).collect())
}

fn family_samples(ratio: f64, phase: f64, s: &[f64]) -> Vec<Vector3<f64>> {
    s.iter()
        .map(|&x| {
            let (sn, cs) = (x + phase).sin_cos();
            let v = Vector3::new(cs, ratio * sn, 0.0);
            v / v.norm()
        })
        .collect()
}

/// Proper rotation `R` minimizing `Σ|u_j − R f_j|²`.
fn kabsch(u: &[Vector3<f64>], f: &[Vector3<f64>]) -> Matrix3<f64> {
    let h = f.iter().zip(u).fold(Matrix3::zeros(), |acc, (a, b)| acc + a * b.transpose());
    let svd = h.svd(true, true);
    let (w, vt) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
    let v = vt.transpose();
    let d = (v * w.transpose()).determinant().signum();
    v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * w.transpose()
}

fn fit_distance(u: &[Vector3<f64>], s: &[f64], ratio: f64, phase: f64) -> (f64, Matrix3<f64>) {
    let f = family_samples(ratio, phase, s);
    let r = kabsch(u, &f);
    let h = 2.0 * PI / s.len() as f64;
    let sq: f64 = u.iter().zip(&f).map(|(a, b)| (a - r * b).norm_squared()).sum();
    ((sq * h).sqrt(), r)
}

/// Minimal Nelder–Mead on a 2D objective.
fn nelder_mead(f: impl Fn(f64, f64) -> f64, start: (f64, f64), scale: (f64, f64), iterations: usize) -> (f64, f64, f64) {
    let mut pts = [
        (start.0, start.1),
        (start.0 + scale.0, start.1),
        (start.0, start.1 + scale.1),
    ];
    let mut vals = pts.map(|p| f(p.0, p.1));
    for _ in 0..iterations {
        let mut idx = [0, 1, 2];
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = idx.map(|i| pts[i]);
        vals = idx.map(|i| vals[i]);
        if (vals[2] - vals[0]).abs() < 1e-15 {
            break;
        }
        let c = ((pts[0].0 + pts[1].0) / 2.0, (pts[0].1 + pts[1].1) / 2.0);
        let along = |t: f64| (c.0 + t * (pts[2].0 - c.0), c.1 + t * (pts[2].1 - c.1));
        let r = along(-1.0);
        let fr = f(r.0, r.1);
        if fr < vals[0] {
            let e = along(-2.0);
            let fe = f(e.0, e.1);
            (pts[2], vals[2]) = if fe < fr { (e, fe) } else { (r, fr) };
        } else if fr < vals[1] {
            (pts[2], vals[2]) = (r, fr);
        } else {
            let k = along(if fr < vals[2] { -0.5 } else { 0.5 });
            let fk = f(k.0, k.1);
            if fk < vals[2].min(fr) {
                (pts[2], vals[2]) = (k, fk);
            } else {
                for i in 1..3 {
                    pts[i] = ((pts[i].0 + pts[0].0) / 2.0, (pts[i].1 + pts[0].1) / 2.0);
                    vals[i] = f(pts[i].0, pts[i].1);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("three points");
    (pts[best].0, pts[best].1, vals[best])
}

/// `min ‖U − R·F_{αβ}(· + τ)‖₂` over axis ratio, phase and rotation.
///
/// Only the ratio `β/α` matters since family tangents are normalized.
pub fn family_distance(u: &TangentField, metric: &FamilyMetric) -> Result<FamilyFit> {
    metric.validate()?;
    let s = u.s_grid();
    let samples = u.samples();
    let clamp = |r: f64| r.clamp(1e-3, 1.0);
    let objective = |r: f64, t: f64| fit_distance(samples, &s, clamp(r), t).0;

    let mut coarse = Vec::new();
    for i in 0..metric.ratio_samples {
        let r = clamp((i + 1) as f64 / metric.ratio_samples as f64);
        for j in 0..metric.phase_samples {
            let t = 2.0 * PI * j as f64 / metric.phase_samples as f64;
            coarse.push((objective(r, t), r, t));
        }
    }
    coarse.sort_by(|a, b| a.0.total_cmp(&b.0));
    let step = (1.0 / metric.ratio_samples as f64, 2.0 * PI / metric.phase_samples as f64);
    let mut best = (f64::INFINITY, 1.0, 0.0);
    for &(_, r, t) in coarse.iter().take(metric.restarts) {
        let (r1, t1, v) = nelder_mead(objective, (r, t), step, metric.simplex_iterations);
        if v < best.0 {
            best = (v, clamp(r1), t1.rem_euclid(2.0 * PI));
        }
    }
    let (distance, rot) = fit_distance(samples, &s, best.1, best.2);
    Ok(FamilyFit {
        distance,
        ratio: best.1,
        phase: best.2,
        rotation: [
            [rot[(0, 0)], rot[(0, 1)], rot[(0, 2)]],
            [rot[(1, 0)], rot[(1, 1)], rot[(1, 2)]],
            [rot[(2, 0)], rot[(2, 1)], rot[(2, 2)]],
        ],
    })
}

/// `∂_β` of the normalized tangent `(α cos s, β sin s, 0)/|·|`: a first-order
/// direction that stays in the family.
pub fn family_direction(alpha: f64, beta: f64, m: usize) -> Vec<Vector3<f64>> {
    spectral::grid(m)
        .iter()
        .map(|&s| {
            let v = Vector3::new(alpha * s.cos(), beta * s.sin(), 0.0);
            let dv = Vector3::new(0.0, s.sin(), 0.0);
            let n = v.norm();
            dv / n - v * (v.dot(&dv) / n.powi(3))
        })
        .collect()
}

/// Make `raw` an admissible first-order direction at `base`: pointwise
/// orthogonal to it and of zero mean. The mean is removed within the
/// orthogonal complement by solving a 3×3 system.
pub fn admissible_direction(base: &TangentField, raw: &[Vector3<f64>]) -> Result<Vec<Vector3<f64>>> {
    let u0 = base.samples();
    if raw.len() != u0.len() {
        return Err(Error::DimensionMismatch {
            expected: u0.len(),
            got: raw.len(),
        });
    }
    let perp = |u: &Vector3<f64>, w: &Vector3<f64>| w - u * u.dot(w);
    let projected: Vec<Vector3<f64>> = u0.iter().zip(raw).map(|(u, w)| perp(u, w)).collect();
    let mean = projected.iter().fold(Vector3::zeros(), |a, v| a + v);
    let gram = u0
        .iter()
        .fold(Matrix3::zeros(), |a, u| a + Matrix3::identity() - u * u.transpose());
    let c = gram
        .lu()
        .solve(&mean)
        .ok_or_else(|| Error::ProjectionIllConditioned("direction mean cannot be removed".into()))?;
    Ok(u0.iter().zip(&projected).map(|(u, w)| w - perp(u, &c)).collect())
}

/// Random admissible direction from a seeded trigonometric field.
pub fn random_direction(base: &TangentField, seed: u64, modes: usize) -> Result<Vec<Vector3<f64>>> {
    let s = base.s_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw = vec![Vector3::zeros(); s.len()];
    for n in 1..=modes {
        let a = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0)) / n as f64;
        let b = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0)) / n as f64;
        for (x, &sj) in raw.iter_mut().zip(&s) {
            let (sn, cs) = (n as f64 * sj).sin_cos();
            *x += a * cs + b * sn;
        }
    }
    let d = admissible_direction(base, &raw)?;
    let norm = (spectral::trapezoid(&d.iter().map(|v| v.norm_squared()).collect::<Vec<_>>())).sqrt();
    Ok(d.iter().map(|v| v / norm).collect())
}

/// Pointwise exponential map `U₀ cos(μ|u₁|) + û₁ sin(μ|u₁|)` followed by the
/// closure projection.
pub fn perturbed_field(base: &TangentField, u1: &[Vector3<f64>], mu: f64) -> Result<TangentField> {
    let raw: Vec<Vector3<f64>> = base
        .samples()
        .iter()
        .zip(u1)
        .map(|(u, w)| {
            let n = w.norm();
            if n == 0.0 {
                *u
            } else {
                u * (mu * n).cos() + w * ((mu * n).sin() / n)
            }
        })
        .collect();
    project_to_admissible(&raw, base.modes()).map_err(|e| Error::ProjectionFailure(format!("mu = {mu}: {e}")))
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanPoint {
    pub mu: f64,
    pub e0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem1Scan {
    pub alpha: f64,
    pub beta: f64,
    pub points: Vec<ScanPoint>,
    /// Coefficient of `μ²` in the fit `e₀ − 1 ≈ pμ + qμ² + rμ³ + tμ⁴`.
    pub q: f64,
    /// Coefficient of `μ`.
    pub odd: f64,
    pub quartic: f64,
    pub fit_residual: f64,
    pub min_excess: f64,
}

/// `e₀` along `μ ↦ γ_μ` generated by `u₁` at the family member `(α, β)`, with
/// a least-squares polynomial fit of `e₀ − 1`. The cubic and quartic terms
/// absorb higher-order curvature of the path so that `q` is the second
/// variation.
pub fn theorem1_scan(alpha: f64, beta: f64, u1: &[Vector3<f64>], mus: &[f64]) -> Result<Theorem1Scan> {
    let base = curve::family_f(alpha, beta, &Matrix3::identity())?;
    theorem1_scan_on(&base, alpha, beta, u1, mus)
}

pub fn theorem1_scan_on(
    base: &TangentField,
    alpha: f64,
    beta: f64,
    u1: &[Vector3<f64>],
    mus: &[f64],
) -> Result<Theorem1Scan> {
    if u1.len() != base.grid_size() {
        return Err(Error::DimensionMismatch {
            expected: base.grid_size(),
            got: u1.len(),
        });
    }
    let defect = u1.iter().zip(base.samples()).map(|(w, u)| w.dot(u).abs()).fold(0.0, f64::max);
    let mean = u1.iter().fold(Vector3::zeros(), |a, v| a + v).norm() / u1.len() as f64;
    if defect > 1e-10 || mean > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "direction is not admissible (orthogonality {defect:e}, mean {mean:e})"
        )));
    }
    if mus.len() < 5 {
        return Err(Error::InvalidInput("at least five mu values are needed for the fit".into()));
    }
    let points = mus
        .iter()
        .map(|&mu| {
            let field = perturbed_field(base, u1, mu)?;
            Ok(ScanPoint {
                mu,
                e0: e0_of_curve(&field)?.e0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let design = DMatrix::from_fn(points.len(), 4, |i, j| points[i].mu.powi(j as i32 + 1));
    let rhs = DVector::from_iterator(points.len(), points.iter().map(|p| p.e0 - 1.0));
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-300)
        .map_err(|e| Error::NumericalFailure(format!("fit: {e}")))?;
    let fit_residual = (&design * &coef - &rhs).norm();
    let min_excess = points.iter().map(|p| p.e0 - 1.0).fold(f64::INFINITY, f64::min);
    Ok(Theorem1Scan {
        alpha,
        beta,
        points,
        q: coef[1],
        odd: coef[0],
        quartic: coef[3],
        fit_residual,
        min_excess,
    })
}

/// Default symmetric grid `±{0.005, 0.01, 0.02, 0.04}`.
pub fn default_mu_grid() -> Vec<f64> {
    let pos = [0.005, 0.01, 0.02, 0.04];
    pos.iter().rev().map(|m| -m).chain(pos.iter().copied()).collect()
}
