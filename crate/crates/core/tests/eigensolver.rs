mod common;

use common::{TrigInterp, fd_lowest, floquet_e0, grid};
use loopspec::curve::{self, family_f};
use loopspec::eigensolver::{
    PeriodicOperator, dirichlet_spectrum, dirichlet_spectrum_extrapolated, e0_of_curve, e0_of_curve_fast,
    periodic_ground_state,
};
use loopspec::probe::random_curve;
use nalgebra::Matrix3;

fn sec2(g: f64) -> impl Fn(f64, f64, f64) -> f64 {
    move |_s, da, db| g / da.min(db).sin().powi(2)
}

fn operator(m: usize, v: impl Fn(f64) -> f64) -> PeriodicOperator {
    PeriodicOperator::new(grid(m).into_iter().map(v).collect()).unwrap()
}

#[test]
fn constant_potential_gives_shifted_squares() {
    let res = periodic_ground_state(&operator(128, |_| 1.0), 7).unwrap();
    let expect = [1.0, 2.0, 2.0, 5.0, 5.0, 10.0, 10.0];
    for (l, e) in res.eigenvalues.iter().zip(expect) {
        assert!((l - e).abs() < 1e-10, "{l} vs {e}");
    }
    assert!((res.gap().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn reported_pairs_satisfy_the_residual_and_ordering_invariants() {
    let res = periodic_ground_state(&operator(256, |s| 1.0 + 0.3 * (2.0 * s).cos() + 0.2 * s.sin()), 6).unwrap();
    for w in res.eigenvalues.windows(2) {
        assert!(w[0] <= w[1]);
    }
    for (l, r) in res.eigenvalues.iter().zip(&res.residuals) {
        assert!(*r <= 1e-8 * (1.0 + l.abs()), "residual {r:e} for {l}");
    }
    // unit discrete norm and a positive mean for the ground state
    let phi = &res.eigenfunctions[0];
    let h = 2.0 * std::f64::consts::PI / phi.len() as f64;
    let norm: f64 = phi.iter().map(|p| p * p).sum::<f64>() * h;
    assert!((norm - 1.0).abs() < 1e-10 || (phi.iter().map(|p| p * p).sum::<f64>() - 1.0).abs() < 1e-10);
    assert!(phi.iter().sum::<f64>() > 0.0);
}

#[test]
fn ellipse_curvature_potential_has_ground_state_one() {
    let u = family_f(1.0, 0.5, &Matrix3::identity()).unwrap();
    let c = curve::curvature(&u);
    let op = PeriodicOperator::new(c.curvature.iter().map(|k| k * k).collect()).unwrap();
    let res = periodic_ground_state(&op, 2).unwrap();
    assert!((res.eigenvalues[0] - 1.0).abs() < 1e-8);
    let phi = &res.eigenfunctions[0];
    let target: Vec<f64> = c.s_grid.iter().map(|s| (s.cos().powi(2) + 0.25 * s.sin().powi(2)).sqrt()).collect();
    let scale = phi.iter().zip(&target).map(|(a, b)| a * b).sum::<f64>() / target.iter().map(|b| b * b).sum::<f64>();
    let err = phi.iter().zip(&target).map(|(a, b)| (a - scale * b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-9, "shape error {err:e}");
}

#[test]
fn smooth_potential_matches_the_finite_difference_oracle() {
    let v = |s: f64| 1.0 + 0.3 * (2.0 * s).cos();
    let spectral = periodic_ground_state(&operator(256, v), 1).unwrap().eigenvalues[0];
    let fd = fd_lowest(&v, 8192);
    assert!((spectral - fd).abs() < 1e-6, "{spectral} vs {fd}");
}

#[test]
fn smooth_potential_matches_the_floquet_oracle() {
    let v = |s: f64| 1.0 + 0.3 * (2.0 * s).cos() - 0.2 * (3.0 * s).sin();
    let spectral = periodic_ground_state(&operator(256, v), 1).unwrap().eigenvalues[0];
    let floquet = floquet_e0(&v);
    assert!((spectral - floquet).abs() < 1e-9, "{spectral} vs {floquet}");
}

#[test]
fn circle_and_family_members_have_e0_one() {
    let circle = e0_of_curve(&family_f(1.0, 1.0, &Matrix3::identity()).unwrap()).unwrap();
    assert!((circle.e0 - 1.0).abs() < 1e-12);
    let mean = circle.phi.iter().sum::<f64>() / circle.phi.len() as f64;
    assert!(circle.phi.iter().all(|p| (p - mean).abs() < 1e-10));
    for beta in [0.2, 0.4, 0.6, 0.8] {
        let g = e0_of_curve(&family_f(1.0, beta, &Matrix3::identity()).unwrap()).unwrap();
        assert!((g.e0 - 1.0).abs() < 1e-7, "beta {beta}: {}", g.e0);
    }
}

#[test]
fn random_curve_respects_the_half_floor_and_agrees_with_floquet() {
    let u = random_curve(11, 6, 0.2).unwrap();
    let g = e0_of_curve(&u).unwrap();
    assert!(g.e0 >= 0.5);
    let c = curve::curvature(&u);
    let k2 = TrigInterp::new(&c.curvature.iter().map(|k| k * k).collect::<Vec<_>>());
    let floquet = floquet_e0(&|s| k2.eval(s));
    assert!((g.e0 - floquet).abs() < 1e-8, "{} vs {floquet}", g.e0);
    let fast = e0_of_curve_fast(&u).unwrap();
    assert!((fast - g.e0).abs() < 1e-9);
}

#[test]
fn monotone_in_the_potential() {
    let base = |s: f64| 0.8 + 0.5 * (2.0 * s).cos();
    let lo = periodic_ground_state(&operator(256, base), 1).unwrap().eigenvalues[0];
    let hi = periodic_ground_state(&operator(256, |s| base(s) + 0.1 * s.sin().powi(2)), 1).unwrap().eigenvalues[0];
    assert!(lo <= hi + 1e-9);
}

#[test]
fn grid_doubling_is_stable_for_smooth_potentials() {
    let v = |s: f64| 1.0 / (1.2 + 0.5 * s.cos());
    let a = periodic_ground_state(&operator(128, v), 1).unwrap().eigenvalues[0];
    let b = periodic_ground_state(&operator(256, v), 1).unwrap().eigenvalues[0];
    assert!((a - b).abs() <= 1e-8);
}

#[test]
fn rayleigh_quotients_match_eigenvalues() {
    let op = operator(256, |s| 1.0 + 0.4 * (2.0 * s).sin());
    let res = periodic_ground_state(&op, 4).unwrap();
    for (l, phi) in res.eigenvalues.iter().zip(&res.eigenfunctions) {
        let hphi = op.apply(phi);
        let rq = hphi.iter().zip(phi).map(|(a, b)| a * b).sum::<f64>() / phi.iter().map(|b| b * b).sum::<f64>();
        assert!((l - rq).abs() <= 1e-9 * (1.0 + l.abs()));
    }
}

#[test]
fn operator_rejects_bad_grids() {
    assert!(PeriodicOperator::new(vec![1.0; 32]).is_err());
    assert!(PeriodicOperator::new(vec![1.0; 100]).is_err());
}

#[test]
fn free_dirichlet_problem_gives_squares() {
    let res = dirichlet_spectrum(|_, _, _| 0.0, 32, 4).unwrap();
    for (n, l) in res.eigenvalues.iter().enumerate() {
        let k = (n + 1) as f64;
        assert!((l - k * k).abs() < 1e-10);
    }
}

#[test]
fn sec2_potentials_approach_the_quantized_values() {
    let a2 = dirichlet_spectrum(sec2(2.0), 400, 1).unwrap().eigenvalues[0];
    assert!((a2 - 4.0).abs() < 1e-3, "g=2 at K=400: {a2}");
    let coarse = dirichlet_spectrum(sec2(2.0), 100, 1).unwrap().eigenvalues[0];
    assert!((coarse - 4.0).abs() >= (a2 - 4.0).abs());

    let exact = ((1.0 + 3f64.sqrt()) / 2.0).powi(2);
    let ext = dirichlet_spectrum_extrapolated(sec2(0.5), &[100, 200, 400], 1).unwrap();
    assert!((ext.extrapolated[0] - exact).abs() < 1e-3, "{} vs {exact}", ext.extrapolated[0]);
}
