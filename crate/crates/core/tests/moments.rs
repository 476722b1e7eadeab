use std::f64::consts::PI;

use lasso_core::fdsim::{simulate, ControlSet, ProblemKind, SimOptions};
use lasso_core::graph::{build_grid_with_cfl, GraphFunction, LassoGeometry, PotentialSpec, SpaceTag, TargetState};
use lasso_core::moments::*;
use lasso_core::spectral::{spectrum_q0, EigenPair, Family};
use lasso_core::wave_rep::ControlTrace;

fn smooth_controls(t: f64, n: usize, problem: ProblemKind) -> ControlSet {
    let f1 = ControlTrace::from_fn(t, n, |s| (PI * s / t).sin().powi(2) * (1.0 + 0.5 * s));
    let f2 = ControlTrace::from_fn(t, n, |s| (PI * s / t).sin().powi(3) - 0.3 * (2.0 * PI * s / t).sin());
    match problem {
        ProblemKind::P1 => ControlSet::p1(f1, f2),
        ProblemKind::P2 => ControlSet::p2(f1, f2, ControlTrace::from_fn(t, n, |s| 0.7 * (3.0 * PI * s / t).sin())),
    }
}

struct Case {
    geom: LassoGeometry,
    spectrum: Vec<EigenPair>,
    t: f64,
}

fn case() -> Case {
    let geom = LassoGeometry::new(1.0, 0.5).unwrap();
    let spectrum = spectrum_q0(&geom, 200.0).unwrap();
    Case { geom, spectrum, t: 2.0 }
}

fn run(c: &Case, controls: &ControlSet, n: usize) -> GraphFunction {
    let grid = build_grid_with_cfl(&c.geom, n, 1.0).unwrap();
    let q = PotentialSpec::constant(&c.geom, 0.0);
    simulate(&c.geom, &q, controls, controls.problem, c.t, &grid, None, SimOptions::default()).unwrap().final_u
}

#[test]
fn zero_controls_have_zero_coefficients() {
    let c = case();
    let z = ControlSet::zeros(ProblemKind::P1, c.t, 100);
    for eig in c.spectrum.iter().take(10) {
        assert_eq!(coefficient_a(&z, eig, c.t), 0.0);
        assert_eq!(coefficient_adot(&z, eig, c.t), 0.0);
    }
}

#[test]
fn coefficients_match_simulated_projections() {
    let c = case();
    for problem in [ProblemKind::P1, ProblemKind::P2] {
        let controls = smooth_controls(c.t, 800, problem);
        let u = run(&c, &controls, 400);
        for eig in c.spectrum.iter().take(12) {
            let (a, p) = (coefficient_a(&controls, eig, c.t), project(&u, eig));
            assert!((a - p).abs() < 2e-3, "{problem:?} ω={} {a} {p}", eig.omega);
        }
    }
}

#[test]
fn parseval_sum_approaches_the_simulated_norm() {
    let c = case();
    for problem in [ProblemKind::P1, ProblemKind::P2] {
        let controls = smooth_controls(c.t, 800, problem);
        let u = run(&c, &controls, 400);
        let norm2 = u.inner(&u);
        let sum: f64 = c.spectrum.iter().take(60).map(|e| coefficient_a(&controls, e, c.t).powi(2)).sum();
        assert!((sum / norm2 - 1.0).abs() < 0.02, "{problem:?} {sum} {norm2}");
    }
}

#[test]
fn integration_by_parts_identity() {
    let c = case();
    let controls = smooth_controls(c.t, 400, ProblemKind::P1);
    for eig in c.spectrum.iter().skip(1).take(40) {
        let direct = eig.omega * coefficient_a(&controls, eig, c.t);
        let parts = coefficient_a_by_parts(&controls, eig, c.t);
        assert!((direct - parts).abs() < 1e-8, "ω={} {direct} {parts}", eig.omega);
    }
}

#[test]
fn zero_frequency_is_the_small_frequency_limit() {
    let g = ControlTrace::from_fn(1.5, 300, |s| s * (1.5 - s) + (3.0 * s).sin());
    let (s0, c0) = kernel_integrals(&g, 1.5, 0.0);
    let (s1, c1) = kernel_integrals(&g, 1.5, 1e-8);
    assert!((s0 - s1).abs() < 1e-7 && (c0 - c1).abs() < 1e-7);
}

#[test]
fn imaginary_frequency_uses_hyperbolic_kernels() {
    let (t, k) = (1.2_f64, 1.7_f64);
    let g = ControlTrace::from_fn(t, 1200, |_| 1.0);
    let (s, c) = kernel_integrals(&g, t, -k * k);
    assert!((s - ((k * t).cosh() - 1.0) / (k * k)).abs() < 1e-10);
    assert!((c - (k * t).sinh() / k).abs() < 1e-10);
}

#[test]
fn closed_form_linear_integrals() {
    // ∫_0^T t sin(ω(T-t))/ω dt = (ωT - sin ωT)/ω³
    let (t, w) = (2.3_f64, 7.1_f64);
    let g = ControlTrace::from_fn(t, 37, |s| s);
    let (s, c) = kernel_integrals(&g, t, w * w);
    assert!((s - (w * t - (w * t).sin()) / w.powi(3)).abs() < 1e-12);
    assert!((c - (1.0 - (w * t).cos()) / (w * w)).abs() < 1e-12);
}

#[test]
fn residuals_of_zero_data_vanish_and_ignore_truncation() {
    let c = case();
    let grid = build_grid_with_cfl(&c.geom, 100, 1.0).unwrap();
    let zero = ControlSet::zeros(ProblemKind::P1, c.t, 200);
    let target = TargetState::zero(&grid);
    assert!(moment_residuals(&zero, c.t, &target, &c.spectrum, 20).iter().all(|r| r.res_shape == 0.0 && r.res_velocity == 0.0));
    let controls = smooth_controls(c.t, 200, ProblemKind::P1);
    let phi = GraphFunction::from_fns(&grid, |x| x * (1.0 - x), |x| (PI * x).sin(), |x| (PI * x).sin());
    let target = TargetState::new(phi.clone(), phi, SpaceTag::H10).unwrap();
    let short = moment_residuals(&controls, c.t, &target, &c.spectrum, 10);
    let long = moment_residuals(&controls, c.t, &target, &c.spectrum, 30);
    assert_eq!(&long[..10], &short[..]);
}

#[test]
fn single_controls_miss_their_invisible_modes() {
    let c = case();
    let antisym: Vec<&EigenPair> = c.spectrum.iter().filter(|e| e.family == Family::RingAntisym).take(5).collect();
    let z = ControlTrace::zeros(c.t, 200);
    let f = ControlTrace::from_fn(c.t, 200, |s| (PI * s / c.t).sin());
    let boundary = ControlSet::p1(f.clone(), z.clone());
    for eig in antisym {
        assert_eq!(coefficient_a(&boundary, eig, c.t), 0.0);
    }
    let interior = ControlSet::p1(z, f);
    assert_eq!(c.spectrum[0].family, Family::Constant);
    assert_eq!(coefficient_a(&interior, &c.spectrum[0], c.t), 0.0);
}

#[test]
fn demos_report_vanishing_quantities() {
    let geom = LassoGeometry::new(1.0, 1.0).unwrap();
    let r = demo_noncontrollability(DemoKind::InteriorOnly, &geom, 2.0, 4, 42, 50).unwrap();
    assert!(r.max_a1.unwrap() < 1e-10);
    let r = demo_noncontrollability(DemoKind::BoundaryOnly, &geom, 2.0, 4, 42, 50).unwrap();
    assert!(r.max_ring_asymmetry.unwrap() < 1e-12);
    assert!(r.max_antisym_coefficient.unwrap() < 1e-8 && r.max_antisym_simulated.unwrap() < 1e-8);
    assert_eq!(r.antisym_omegas.len(), 5);
    let again = demo_noncontrollability(DemoKind::BoundaryOnly, &geom, 2.0, 4, 42, 50).unwrap();
    assert_eq!(r, again);
}
