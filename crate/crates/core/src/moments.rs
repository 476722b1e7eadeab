//! Spectral coefficients of controlled solutions, moment residuals of
//! synthesized controls and the one-control counterexamples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fdsim::{simulate, ControlSet, ProblemKind, SimOptions};
use crate::graph::{build_grid, Edge, GraphFunction, LassoGeometry, PotentialSpec, TargetState};
use crate::spectral::{spectrum_q0, EigenPair, Family};
use crate::wave_rep::ControlTrace;

/// Below this `ω Δt` an interval is integrated by Simpson's rule instead of
/// the closed form, which cancels badly there.
const SMALL_PHASE: f64 = 1e-3;

/// `(∫ g(t) K(T - t) dt, ∫ g(t) K'(T - t) dt)` over `[0, T]` for the
/// piecewise-linear `g` through the samples of `trace` (zero past its end),
/// with `K(s) = sin(ωs)/ω`, `s` or `sinh(κs)/κ` for `λ = ω² > 0`, `= 0` or
/// `= -κ² < 0`.
pub fn kernel_integrals(trace: &ControlTrace, t: f64, lambda: f64) -> (f64, f64) {
    let step = trace.step;
    let last = (trace.values.len() - 1) as f64 * step;
    let end = t.min(last);
    let n = (end / step - 1e-9).ceil().max(0.0) as usize;
    let mut acc = (0.0, 0.0);
    for i in 0..n {
        let t0 = i as f64 * step;
        let t1 = ((i + 1) as f64 * step).min(end);
        let (g0, g1) = (trace.values[i], trace.eval(t1));
        let (s, c) = interval_integrals(g0, g1, t0, t1, t, lambda);
        acc.0 += s;
        acc.1 += c;
    }
    acc
}

fn kernels(lambda: f64, s: f64) -> (f64, f64) {
    if lambda > 0.0 {
        let w = lambda.sqrt();
        ((w * s).sin() / w, (w * s).cos())
    } else if lambda == 0.0 {
        (s, 1.0)
    } else {
        let k = (-lambda).sqrt();
        ((k * s).sinh() / k, (k * s).cosh())
    }
}

/// Exact integrals of the linear function through `(t0, g0)`, `(t1, g1)`
/// against `K(T - t)` and `K'(T - t)`.
fn interval_integrals(g0: f64, g1: f64, t0: f64, t1: f64, t: f64, lambda: f64) -> (f64, f64) {
    let d = t1 - t0;
    let w = lambda.max(0.0).sqrt();
    if lambda <= 0.0 || w * d < SMALL_PHASE {
        let gm = 0.5 * (g0 + g1);
        let (k0, k0p) = kernels(lambda, t - t0);
        let (km, kmp) = kernels(lambda, t - 0.5 * (t0 + t1));
        let (k1, k1p) = kernels(lambda, t - t1);
        return (
            d / 6.0 * (g0 * k0 + 4.0 * gm * km + g1 * k1),
            d / 6.0 * (g0 * k0p + 4.0 * gm * kmp + g1 * k1p),
        );
    }
    let m = (g1 - g0) / d;
    let (th0, th1) = (w * (t - t0), w * (t - t1));
    let (s0, c0, s1, c1) = (th0.sin(), th0.cos(), th1.sin(), th1.cos());
    let sin_int = g0 * (c1 - c0) / w + m * (d * c1 / w + (s1 - s0) / (w * w));
    let cos_int = -g0 * (s1 - s0) / w + m * (-d * s1 / w + (c1 - c0) / (w * w));
    (sin_int / w, cos_int)
}

/// Weights of the controls in the forcing of mode `eig`: `f1 φ(l) + f2 ∂φ2(0)`
/// for the boundary problem and `-f1 φ(0) + f2 ∂φ2(0) + f3 ∂φ3(0)` for the
/// interior one.
fn forcing<'c>(controls: &'c ControlSet, eig: &EigenPair) -> Vec<(&'c ControlTrace, f64)> {
    let d = eig.trace.dphi;
    match controls.problem {
        ProblemKind::P1 => vec![(&controls.f1, eig.trace.phi_l), (&controls.f2, d[1])],
        ProblemKind::P2 => {
            let mut out = vec![(&controls.f1, -eig.value(Edge::E1, 0.0)), (&controls.f2, d[1])];
            if let Some(f3) = &controls.f3 {
                out.push((f3, d[2]));
            }
            out
        }
    }
}

fn coefficients(controls: &ControlSet, eig: &EigenPair, t: f64) -> (f64, f64) {
    let lambda = eig.omega * eig.omega;
    forcing(controls, eig).into_iter().fold((0.0, 0.0), |acc, (f, w)| {
        if w == 0.0 {
            return acc;
        }
        let (s, c) = kernel_integrals(f, t, lambda);
        (acc.0 + w * s, acc.1 + w * c)
    })
}

/// `a_n(T) = ⟨u(T), φ_n⟩` for the solution driven from rest by `controls`.
pub fn coefficient_a(controls: &ControlSet, eig: &EigenPair, t: f64) -> f64 {
    coefficients(controls, eig, t).0
}

/// `ȧ_n(T) = ⟨u_t(T), φ_n⟩`.
pub fn coefficient_adot(controls: &ControlSet, eig: &EigenPair, t: f64) -> f64 {
    coefficients(controls, eig, t).1
}

/// `ω a_n(T)` for the boundary problem with the jump term integrated by
/// parts: `∫ [f1 α sin ω(T-t) - f2' β cos ω(T-t)] dt`, `α = φ(l)`,
/// `β = ∂φ2(0)/ω`. Agrees with `ω` times [`coefficient_a`] when `f2`
/// vanishes at both ends.
pub fn coefficient_a_by_parts(controls: &ControlSet, eig: &EigenPair, t: f64) -> f64 {
    let w = eig.omega;
    let lambda = w * w;
    let alpha = eig.trace.phi_l;
    let f1_term = w * kernel_integrals(&controls.f1, t, lambda).0;
    // f2' is piecewise constant; each piece is integrated exactly
    let f2 = &controls.f2;
    let h = f2.step;
    let end = t.min((f2.values.len() - 1) as f64 * h);
    let n = (end / h - 1e-9).ceil().max(0.0) as usize;
    let mut f2_term = 0.0;
    for i in 0..n {
        let t0 = i as f64 * h;
        let t1 = ((i + 1) as f64 * h).min(end);
        let slope = (f2.eval(t1) - f2.values[i]) / (t1 - t0);
        f2_term += slope * ((w * (t - t0)).sin() - (w * (t - t1)).sin()) / w;
    }
    alpha * f1_term - eig.trace.dphi[1] / w * f2_term
}

/// Graph inner product of sampled data with an eigenfunction, by Simpson's
/// rule on edges with an even number of steps and the trapezoid otherwise.
pub fn project(u: &GraphFunction, eig: &EigenPair) -> f64 {
    let h = u.h;
    Edge::ALL
        .iter()
        .map(|e| {
            let v: Vec<f64> = u.edge(*e).iter().enumerate().map(|(i, x)| x * eig.value(*e, i as f64 * h)).collect();
            let n = v.len() - 1;
            if n % 2 == 0 && n > 0 {
                let inner: f64 = (1..n).map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * v[i]).sum();
                h / 3.0 * (v[0] + inner + v[n])
            } else {
                crate::graph::trapezoid(&v, h)
            }
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEntry {
    pub n: usize,
    pub omega: f64,
    /// `φ_n(l)`.
    pub alpha: f64,
    /// `∂φ_{n,j}(0) / ω_n` for `j = 1, 2, 3` (zero at `ω_n = 0`).
    pub kappa: [f64; 3],
    pub a: f64,
    pub adot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub time: f64,
    pub truncation: usize,
    pub entries: Vec<MomentEntry>,
}

/// Coefficients of the first `n` modes at time `t`.
pub fn moment_table(controls: &ControlSet, spectrum: &[EigenPair], t: f64, n: usize) -> MomentTable {
    let entries = spectrum
        .iter()
        .take(n)
        .enumerate()
        .map(|(i, eig)| {
            let (a, adot) = coefficients(controls, eig, t);
            let w = eig.omega;
            MomentEntry {
                n: i,
                omega: w,
                alpha: eig.trace.phi_l,
                kappa: eig.trace.dphi.map(|d| if w > 0.0 { d / w } else { 0.0 }),
                a,
                adot,
            }
        })
        .collect();
    MomentTable {
        time: t,
        truncation: n,
        entries,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentResidual {
    pub n: usize,
    pub omega: f64,
    /// `|ω_n (a_n(T) - ⟨φ1, φ_n⟩)|`, unweighted at `ω_n = 0`.
    pub res_shape: f64,
    /// `|ȧ_n(T) - ⟨φ2, φ_n⟩|`.
    pub res_velocity: f64,
}

/// Per-mode mismatch between the coefficients produced by `controls` at
/// time `t` and those of `target`, taken by direct projection.
pub fn moment_residuals(controls: &ControlSet, t: f64, target: &TargetState, spectrum: &[EigenPair], n: usize) -> Vec<MomentResidual> {
    moment_table(controls, spectrum, t, n)
        .entries
        .iter()
        .zip(spectrum)
        .map(|(e, eig)| {
            let weight = if e.omega > 0.0 { e.omega } else { 1.0 };
            MomentResidual {
                n: e.n,
                omega: e.omega,
                res_shape: weight * (e.a - project(&target.phi1, eig)).abs(),
                res_velocity: (e.adot - project(&target.phi2, eig)).abs(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoKind {
    /// Only the boundary control `f1` acts; the ring stays symmetric.
    BoundaryOnly,
    /// Only the ring jump `f2` acts; the constant mode is never excited.
    InteriorOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoReport {
    pub kind: DemoKind,
    pub time: f64,
    pub trials: usize,
    pub seed: u64,
    /// Interior only: `max |a_1(T)|` of the constant mode, by formula.
    pub max_a1: Option<f64>,
    /// Interior only: the same coefficient projected from the simulation.
    pub max_a1_simulated: Option<f64>,
    /// Boundary only: `max |u2 - u3|` over the ring and all time levels.
    pub max_ring_asymmetry: Option<f64>,
    /// Boundary only: largest antisymmetric coefficient, by formula.
    pub max_antisym_coefficient: Option<f64>,
    /// Boundary only: the same projected from the simulation.
    pub max_antisym_simulated: Option<f64>,
    pub antisym_omegas: Vec<f64>,
}

const ANTISYM_MODES: usize = 5;
const TRIAL_MODES: usize = 4;

/// `Σ_k c_k sin(kπt/T)` sampled on `[0, T]`, vanishing at both ends.
fn random_trace(rng: &mut ChaCha8Rng, t: f64, n: usize) -> ControlTrace {
    let c: Vec<f64> = (0..TRIAL_MODES).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let h = t / n as f64;
    let mut values: Vec<f64> = (0..=n)
        .map(|i| {
            let s = i as f64 * h;
            c.iter().enumerate().map(|(k, ck)| ck * ((k + 1) as f64 * std::f64::consts::PI * s / t).sin()).sum()
        })
        .collect();
    values[0] = 0.0;
    values[n] = 0.0;
    ControlTrace::l2(h, values)
}

/// Runs random single-control trials for the unperturbed problem (`q = 0`)
/// on the boundary-controlled lasso and reports the quantities that stay
/// zero whatever the control.
pub fn demo_noncontrollability(kind: DemoKind, geom: &LassoGeometry, t: f64, trials: usize, seed: u64, n_per_unit: usize) -> Result<DemoReport> {
    let grid = build_grid(geom, n_per_unit)?;
    let steps = crate::graph::steps_in(t, grid.dt)?;
    let t_end = steps as f64 * grid.dt;
    let spectrum = spectrum_q0(geom, 2.0 * std::f64::consts::PI * (ANTISYM_MODES + 1) as f64 / geom.a())?;
    let q = PotentialSpec::constant(geom, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = DemoReport {
        kind,
        time: t_end,
        trials,
        seed,
        max_a1: None,
        max_a1_simulated: None,
        max_ring_asymmetry: None,
        max_antisym_coefficient: None,
        max_antisym_simulated: None,
        antisym_omegas: Vec::new(),
    };
    let zero = ControlTrace::l2(t_end / steps as f64, vec![0.0; steps + 1]);
    let antisym: Vec<&EigenPair> = spectrum.iter().filter(|p| p.family == Family::RingAntisym).take(ANTISYM_MODES).collect();
    let constant = &spectrum[0];
    let (mut formula, mut simulated, mut asym) = (0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..trials {
        let f = random_trace(&mut rng, t_end, steps);
        let controls = match kind {
            DemoKind::InteriorOnly => ControlSet::p1(zero.clone(), f),
            DemoKind::BoundaryOnly => ControlSet::p1(f, zero.clone()),
        };
        let traj = simulate(geom, &q, &controls, ProblemKind::P1, t_end, &grid, None, SimOptions::default())?;
        match kind {
            DemoKind::InteriorOnly => {
                formula = formula.max(coefficient_a(&controls, constant, t_end).abs());
                simulated = simulated.max(project(&traj.final_u, constant).abs());
            }
            DemoKind::BoundaryOnly => {
                asym = asym.max(traj.traces.ring_asymmetry.iter().fold(0.0_f64, |m, v| m.max(*v)));
                for eig in &antisym {
                    formula = formula.max(coefficient_a(&controls, eig, t_end).abs());
                    simulated = simulated.max(project(&traj.final_u, eig).abs());
                }
            }
        }
    }
    match kind {
        DemoKind::InteriorOnly => {
            report.max_a1 = Some(formula);
            report.max_a1_simulated = Some(simulated);
        }
        DemoKind::BoundaryOnly => {
            report.max_ring_asymmetry = Some(asym);
            report.max_antisym_coefficient = Some(formula);
            report.max_antisym_simulated = Some(simulated);
            report.antisym_omegas = antisym.iter().map(|p| p.omega).collect();
        }
    }
    Ok(report)
}
