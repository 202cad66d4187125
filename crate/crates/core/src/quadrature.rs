//! Quadrature rules: Gauss–Legendre (plain and composite), tanh–sinh for
//! endpoint singularities, and adaptive Gauss–Kronrod.

use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n
            let mut x = ((i as f64 + 0.75) / (n as f64 + 0.5) * PI).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// `∫_a^b f`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
            * h
    }

    /// Composite rule over consecutive breakpoints.
    pub fn integrate_panels(&self, breaks: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
        breaks
            .windows(2)
            .map(|p| self.integrate(p[0], p[1], &mut f))
            .sum()
    }

    /// Nodes and weights of the composite rule, for callers that assemble
    /// many integrals against the same points.
    pub fn composite_points(&self, breaks: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::with_capacity(self.nodes.len() * breaks.len());
        let mut ws = Vec::with_capacity(self.nodes.len() * breaks.len());
        for p in breaks.windows(2) {
            let c = 0.5 * (p[0] + p[1]);
            let h = 0.5 * (p[1] - p[0]);
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                xs.push(c + h * x);
                ws.push(w * h);
            }
        }
        (xs, ws)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Breakpoints on `[a, b]` refined geometrically towards both endpoints:
/// `levels` panels with ratio `ratio` at each end, `interior` uniform
/// panels in between.
pub fn graded_breaks(a: f64, b: f64, levels: usize, ratio: f64, interior: usize) -> Vec<f64> {
    let len = b - a;
    let edge = 0.25 * len;
    let mut left = vec![a];
    let mut ends: Vec<f64> = (0..levels).map(|k| edge * ratio.powi(k as i32)).collect();
    ends.reverse();
    left.extend(ends.iter().map(|d| a + d));
    let mut breaks = left.clone();
    let inner = interior.max(1);
    let lo = a + edge;
    let hi = b - edge;
    for k in 1..inner {
        breaks.push(lo + (hi - lo) * k as f64 / inner as f64);
    }
    let mut right: Vec<f64> = left.iter().rev().map(|x| b - (x - a)).collect();
    breaks.append(&mut right);
    breaks
}

/// Tanh–sinh rule on `[a, b]`. The integrand receives the node and its
/// distances to both endpoints so it can avoid cancellation near them.
pub fn tanh_sinh(
    a: f64,
    b: f64,
    tol: f64,
    mut f: impl FnMut(f64, f64, f64) -> f64,
) -> Result<f64> {
    let half = 0.5 * (b - a);
    // reaches endpoint distances near 1e−220, enough for x^{−0.9}-type mass
    let t_max = 6.5;
    let mut h = 0.5;
    let mut eval = |t: f64| -> f64 {
        let u = 0.5 * PI * t.sinh();
        let ch = u.cosh();
        // distance from x to the nearer endpoint, in units of `half`
        let d = (-u.abs()).exp() / ch;
        let w = 0.5 * PI * t.cosh() / (ch * ch);
        let (da, db) = if t < 0.0 {
            (half * d, 2.0 * half - half * d)
        } else {
            (2.0 * half - half * d, half * d)
        };
        if da <= 0.0 || db <= 0.0 || w == 0.0 {
            return 0.0;
        }
        let x = if t < 0.0 { a + da } else { b - db };
        f(x, da, db) * w * half
    };
    let mut sum = eval(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = sum * h;
    for _ in 0..12 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= t_max {
            let t = k as f64 * h;
            sum += eval(t) + eval(-t);
            k += 2;
        }
        let next = sum * h;
        let delta = (next - estimate).abs();
        estimate = next;
        if delta <= tol * estimate.abs().max(1.0) {
            return Ok(estimate);
        }
    }
    Err(Error::QuadratureFailure(format!(
        "tanh-sinh on [{a}, {b}] did not reach tolerance {tol:e}"
    )))
}

// Gauss–Kronrod 7/15 nodes on [0, 1] (symmetric), QUADPACK values.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15(a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

#[derive(Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Segment {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Globally adaptive Gauss–Kronrod 7/15 quadrature over `[a, b]`, with
/// optional interior breakpoints where the integrand is known to be steep.
pub fn adaptive(
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    mut f: impl FnMut(f64) -> f64,
) -> Result<f64> {
    const MAX_SEGMENTS: usize = 20_000;
    let mut pts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    pts.extend(inner);
    pts.push(b);
    pts.dedup();

    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut err = 0.0;
    for p in pts.windows(2) {
        let (v, e) = kronrod15(p[0], p[1], &mut f);
        total += v;
        err += e;
        heap.push(Segment {
            a: p[0],
            b: p[1],
            value: v,
            error: e,
        });
    }
    while err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= MAX_SEGMENTS {
            return Err(Error::QuadratureFailure(format!(
                "adaptive quadrature on [{a}, {b}]: error {err:e} after {MAX_SEGMENTS} segments"
            )));
        }
        let seg = heap.pop().expect("nonempty");
        let m = 0.5 * (seg.a + seg.b);
        if m <= seg.a || m >= seg.b {
            // segment cannot be split further in floating point
            heap.push(Segment { error: 0.0, ..seg });
            err = heap.iter().map(|s| s.error).sum();
            continue;
        }
        let (v1, e1) = kronrod15(seg.a, m, &mut f);
        let (v2, e2) = kronrod15(m, seg.b, &mut f);
        total += v1 + v2 - seg.value;
        err += e1 + e2 - seg.error;
        heap.push(Segment {
            a: seg.a,
            b: m,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: m,
            b: seg.b,
            value: v2,
            error: e2,
        });
    }
    // re-sum to shed accumulated rounding in the running total
    Ok(heap.iter().map(|s| s.value).sum())
}
