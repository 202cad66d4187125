mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use common::{panels, rng, uniform, uniform_breaks};
use loopspec::Error;
use loopspec::gegenbauer::{
    GegenbauerSpectrum, SineSeries, TestFunction, eigenfunction, eigenvalue, exponent_a, hardy_check,
    recursion_coefficients, sharp_quarter_form, spectrum_table,
};

/// Uniform interior panels plus geometric grading towards both ends, where
/// `cos^{2a}` with `a` near one half is only mildly smooth.
fn interval_breaks() -> Vec<f64> {
    let mut b = uniform_breaks(-1.5, 1.5, 24);
    let mut d = FRAC_PI_2 - 1.5;
    while d > 1e-16 {
        d *= 0.5;
        b.extend([-FRAC_PI_2 + d, FRAC_PI_2 - d]);
    }
    b.extend([-FRAC_PI_2, FRAC_PI_2]);
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b
}

#[test]
fn exponent_and_eigenvalue_examples() {
    let cases = [(0.0, 1.0), (2.0, 2.0), (0.75, 1.5), (-0.25, 0.5), (6.0, 3.0)];
    for (g, a) in cases {
        assert!((exponent_a(g).unwrap() - a).abs() < 1e-15);
        // a(a − 1) = g
        assert!((a * (a - 1.0) - g).abs() < 1e-14);
    }
    assert_eq!(eigenvalue(0.0, 0).unwrap(), 1.0);
    assert_eq!(eigenvalue(0.0, 3).unwrap(), 16.0);
    assert!((eigenvalue(2.0, 1).unwrap() - 9.0).abs() < 1e-14);
    assert!((eigenvalue(0.75, 0).unwrap() - 2.25).abs() < 1e-14);
    assert!(matches!(exponent_a(-0.3), Err(Error::OutOfRange(_))));
    assert!(matches!(eigenvalue(-0.25, 0), Err(Error::OutOfRange(_))));
}

#[test]
fn eigenfunctions_are_orthonormal() {
    for g in [-0.2, 0.0, 0.5, 2.0, 6.0] {
        let spec = GegenbauerSpectrum::new(g).unwrap();
        for i in 0..=6 {
            for j in 0..=i {
                let gram = panels(&interval_breaks(), 40, |s| spec.eigenfunction_at(i, s) * spec.eigenfunction_at(j, s));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram - expect).abs() < 1e-8, "g {g} ({i},{j}): {gram}");
            }
        }
    }
}

#[test]
fn eigenfunctions_satisfy_the_equation() {
    let lo = -FRAC_PI_2 + 1e-4;
    let breaks = uniform_breaks(lo, -lo, 32);
    let h = 1e-3;
    for g in [-0.1, 0.0, 0.5, 2.0] {
        let spec = GegenbauerSpectrum::new(g).unwrap();
        for n in 0..=6 {
            let lambda = spec.eigenvalue(n);
            // L² residual from the analytic jet
            let sq = panels(&breaks, 30, |s| {
                let [w, _, d2] = spec.eigenfunction_jet(n, s);
                (-d2 + g / s.cos().powi(2) * w - lambda * w).powi(2)
            });
            assert!(sq.sqrt() <= 1e-7 * lambda, "g {g} n {n}: {:e}", sq.sqrt());
            // the jet itself against a sixth-order centred difference of the values
            let w = |s: f64| spec.eigenfunction_at(n, s);
            for k in 0..=20 {
                let s = -1.3 + 2.6 * k as f64 / 20.0;
                let d2 = (2.0 * (w(s + 3.0 * h) + w(s - 3.0 * h)) - 27.0 * (w(s + 2.0 * h) + w(s - 2.0 * h))
                    + 270.0 * (w(s + h) + w(s - h))
                    - 490.0 * w(s))
                    / (180.0 * h * h);
                let jet = spec.eigenfunction_jet(n, s);
                assert!((jet[2] - d2).abs() < 1e-7 * lambda, "g {g} n {n} s {s}: {} vs {d2}", jet[2]);
                assert!((jet[0] - w(s)).abs() == 0.0);
            }
        }
    }
}

#[test]
fn eigenfunction_examples() {
    let s: Vec<f64> = (0..9).map(|k| -1.5 + 3.0 * k as f64 / 8.0).collect();
    let free = eigenfunction(0.0, 1, &s).unwrap();
    // n = 1 at g = 0 is √(2/π) sin 2s up to sign
    let sign = free[1].signum() * (2.0 * s[1]).sin().signum();
    for (v, x) in free.iter().zip(&s) {
        assert!((v - sign * (2.0 / PI).sqrt() * (2.0 * x).sin()).abs() < 1e-13);
    }
    // a = 2: w₀ ∝ cos²
    let w = eigenfunction(2.0, 0, &s).unwrap();
    let norm = (3.0 * PI / 8.0f64).sqrt();
    for (v, x) in w.iter().zip(&s) {
        assert!((v - x.cos().powi(2) / norm).abs() < 1e-13);
    }
    assert!(matches!(eigenfunction(1.0, 21, &s), Err(Error::OutOfRange(_))));
    assert!(matches!(eigenfunction(-0.3, 0, &s), Err(Error::OutOfRange(_))));
}

#[test]
fn recursion_reproduces_the_eigenfunctions() {
    for g in [0.0, 0.5, 2.0] {
        let spec = GegenbauerSpectrum::new(g).unwrap();
        let a = spec.a;
        for n in 0..=4 {
            let r = recursion_coefficients(g, spec.eigenvalue(n), 30).unwrap();
            assert_eq!(r.terminates_at, Some(n));
            let poly = |s: f64| {
                let xi = 0.5 * (1.0 + s.sin());
                r.coefficients.iter().rev().fold(0.0, |acc, b| acc * xi + b)
            };
            let samples = [-1.2, -0.5, 0.1, 0.8, 1.3];
            let ratios: Vec<f64> = samples.iter().map(|&s| spec.eigenfunction_at(n, s) / s.cos().powf(a) / poly(s)).collect();
            for q in &ratios {
                assert!((q - ratios[0]).abs() < 1e-10 * ratios[0].abs(), "g {g} n {n}: {ratios:?}");
            }
        }
        // off the quantized values the series never terminates
        let r = recursion_coefficients(g, spec.eigenvalue(1) + 0.3, 40).unwrap();
        assert!(r.terminates_at.is_none());
        assert!(r.coefficients.iter().skip(1).all(|b| *b != 0.0));
    }
}

#[test]
fn hardy_examples() {
    let w = (|s: f64| s * (1.0 - s), |s: f64| 1.0 - 2.0 * s);
    let (lhs, rhs) = hardy_check(&w, 1.0).unwrap();
    assert!((lhs - 1.0 / 12.0).abs() < 1e-12 && (rhs - 1.0 / 3.0).abs() < 1e-12);

    let sine = SineSeries { lo: 0.0, hi: 1.0, coeffs: vec![1.0] };
    let (lhs, rhs) = hardy_check(&sine, 1.0).unwrap();
    assert!((rhs - PI * PI / 2.0).abs() < 1e-12);
    // ¼∫ sin²(πs)/s²: smooth integrand, plain panels
    let oracle = 0.25 * panels(&uniform_breaks(0.0, 1.0, 8), 20, |s| ((PI * s).sin() / s).powi(2));
    assert!((lhs - oracle).abs() < 1e-12);

    // both sides scale like 1/L under stretching
    let stretched = SineSeries { lo: 0.0, hi: 3.0, coeffs: vec![1.0] };
    let (l3, r3) = hardy_check(&stretched, 3.0).unwrap();
    assert!((3.0 * l3 - lhs).abs() < 1e-12 && (3.0 * r3 - rhs).abs() < 1e-12);

    assert!(matches!(hardy_check(&(|s: f64| s + 0.1, |_| 1.0), 1.0), Err(Error::BoundaryViolation(_))));
    assert!(matches!(hardy_check(&sine, 0.0), Err(Error::OutOfRange(_))));
}

#[test]
fn hardy_inequality_on_random_sine_series() {
    let mut r = rng(5);
    for _ in 0..100 {
        let len = uniform(&mut r, 0.5, 4.0);
        let coeffs: Vec<f64> = (1..=8).map(|k| uniform(&mut r, -1.0, 1.0) / (k * k) as f64).collect();
        let w = SineSeries { lo: 0.0, hi: len, coeffs };
        let (lhs, rhs) = hardy_check(&w, len).unwrap();
        assert!(lhs <= rhs, "{lhs} > {rhs}");
        let oracle = 0.25 * panels(&uniform_breaks(0.0, len, 16), 20, |s| (w.value(s) / s).powi(2));
        assert!((lhs - oracle).abs() < 1e-10 * (1.0 + oracle));
    }
}

/// `cos^p` on `(−π/2, π/2)` with exact endpoint behaviour.
struct CosPower(f64);

impl TestFunction for CosPower {
    fn value(&self, s: f64) -> f64 {
        s.cos().max(0.0).powf(self.0)
    }
    fn derivative(&self, s: f64) -> f64 {
        -self.0 * s.cos().max(0.0).powf(self.0 - 1.0) * s.sin()
    }
    fn value_from_end(&self, _end: f64, _inward: f64, d: f64) -> f64 {
        d.sin().powf(self.0)
    }
    fn derivative_from_end(&self, _end: f64, inward: f64, d: f64) -> f64 {
        inward * self.0 * d.sin().powf(self.0 - 1.0) * d.cos()
    }
}

#[test]
fn sharp_quarter_form_examples() {
    // ∫sin² − ¼∫cos² − ¼∫1
    assert!((sharp_quarter_form(&CosPower(1.0)).unwrap() - PI / 8.0).abs() < 1e-10);
    let zero = SineSeries { lo: -FRAC_PI_2, hi: FRAC_PI_2, coeffs: vec![0.0] };
    assert_eq!(sharp_quarter_form(&zero).unwrap(), 0.0);

    let values: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|e| sharp_quarter_form(&CosPower(0.5 + e)).unwrap()).collect();
    assert!(values[0] > values[1] && values[1] > values[2] && values[2] > 0.0, "{values:?}");
    // with I(q) = ∫cos^q and I(2p) = (2p − 1)/(2p)·I(2p − 2) the form on
    // cos^p reduces to (2p − 1)²/(8p)·I(2p − 2)
    for (e, v) in [0.2, 0.1, 0.05].iter().zip(&values) {
        let p = 0.5 + e;
        // I(q) = B(1/2, (q + 1)/2)
        let integral = statrs::function::beta::beta(0.5, 0.5 * (2.0 * p - 1.0));
        let exact = (2.0 * p - 1.0).powi(2) / (8.0 * p) * integral;
        assert!((v - exact).abs() < 1e-8 * exact.max(1e-3), "p {p}: {v} vs {exact}");
    }
}

#[test]
fn sharp_quarter_form_is_nonnegative_on_random_functions() {
    let mut r = rng(6);
    for _ in 0..100 {
        let coeffs: Vec<f64> = (1..=8).map(|k| uniform(&mut r, -1.0, 1.0) / (k * k) as f64).collect();
        let w = SineSeries { lo: -FRAC_PI_2, hi: FRAC_PI_2, coeffs };
        assert!(sharp_quarter_form(&w).unwrap() >= -1e-10);
    }
}

#[test]
fn low_eigenvalues_exceed_the_free_thresholds() {
    for g in [-0.2, -0.1, 0.5, 2.0] {
        let spec = GegenbauerSpectrum::new(g).unwrap();
        assert!(spec.eigenvalue(0) > 0.25 && spec.eigenvalue(1) > 1.0);
    }
}

#[test]
fn galerkin_extrapolation_matches_the_closed_form() {
    for g in [0.0, 0.5, 2.0] {
        let a = 0.5 * (1.0 + (1.0f64 + 4.0 * g).sqrt());
        for row in spectrum_table(g, 3, &[200, 400, 800]).unwrap() {
            assert!((row.lambda_exact - (row.n as f64 + a).powi(2)).abs() < 1e-12);
            assert!(row.abserr < 1e-3, "g {g} n {}: {}", row.n, row.abserr);
        }
    }
}
