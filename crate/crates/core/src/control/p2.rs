//! Synthesis for the problem with jump controls on both ring edges and a
//! flux control at the interior vertex. The three vertex traces
//! `y_j(t) = u_j(0, t)` act independently on their edges.

use crate::error::{Error, Result};
use crate::fdsim::{simulate, ControlSet, ProblemKind, SimOptions};
use crate::graph::{check_h10, cumulative_trapezoid, derivative_second_order, steps_in, Edge, GraphFunction, LassoGeometry, PotentialSpec};
use crate::kernels::{solve_goursat_folded, Kernel, KernelBc};
use crate::wave_rep::{ControlTrace, Regularity, RightBc};

use super::bump::{plateau_pulse, pulse_response};
use super::{grid_for, note, shifted, solve_logged, StageLog, SynthesisReport};

const MIN_PULSE_RESPONSE: f64 = 1e-8;

struct Edges {
    h: f64,
    /// Steps in the support of each vertex trace: `l`, `a`, `a`.
    len: [usize; 3],
    k: [Kernel; 3],
}

impl Edges {
    fn new(geom: &LassoGeometry, q: &PotentialSpec, h: f64, horizon: f64) -> Result<Self> {
        let build = || -> Result<Self> {
            let nl = steps_in(geom.l(), h)?;
            let na = steps_in(geom.a(), h)?;
            Ok(Self {
                h,
                len: [nl, na, na],
                k: [
                    solve_goursat_folded(&q.q1, KernelBc::Dirichlet, horizon, h)?,
                    solve_goursat_folded(&q.q2, KernelBc::Dirichlet, horizon, h)?,
                    solve_goursat_folded(&q.q3, KernelBc::Dirichlet, horizon, h)?,
                ],
            })
        };
        build().map_err(Error::at_stage("kernels"))
    }

    /// Trace on edge `j` ending at `T` from the edge values at `T`:
    /// `Z(τ) + ∫_0^τ k(L-τ, L-σ) Z(σ) dσ = φ(L-τ)`.
    fn trace(&self, j: usize, phi: &[f64], log: &mut Vec<StageLog>) -> Result<Vec<f64>> {
        let n = self.len[j];
        let k = &self.k[j];
        let rhs = (0..=n).map(|i| phi[n - i]).collect();
        solve_logged(&format!("trace {}", Edge::ALL[j].name()), self.h, &|i, m| k.at(n - i, n - m), rhs, log)
    }

    /// `u_x(0, t)` on edge `j` for the outgoing wave with trace `y`:
    /// `-y'(t) + ∫_0^t r(s) y(t - s) ds`, the integral cut at the kernel
    /// horizon where `y` has not started yet.
    fn outgoing_flux(&self, j: usize, y: &[f64], yp: &[f64], t: usize) -> f64 {
        let k = &self.k[j];
        let top = t.min(k.n);
        let mut acc = 0.0;
        for s in 0..=top {
            let w = if s == 0 || s == t { 0.5 } else { 1.0 };
            acc += w * k.dx_at(0, s) * y[t - s];
        }
        -yp[t] + self.h * acc
    }

    /// Controls producing the traces `y` on `[0, nt]`.
    fn controls(&self, y: &[Vec<f64>; 3], yp: &[Vec<f64>; 3], nt: usize) -> [Vec<f64>; 3] {
        let f1 = (0..=nt).map(|t| (0..3).map(|j| self.outgoing_flux(j, &y[j], &yp[j], t)).sum()).collect();
        let f2 = (0..=nt).map(|t| y[1][t] - y[0][t]).collect();
        let f3 = (0..=nt).map(|t| y[2][t] - y[0][t]).collect();
        [f1, f2, f3]
    }
}

fn edge_values(phi: &GraphFunction) -> [&[f64]; 3] {
    [&phi.e1, &phi.e2, &phi.e3]
}

fn finish(controls: [Vec<f64>; 3], h: f64, regularity: Regularity, t_end: f64, log: Vec<StageLog>, diag: Vec<(String, f64)>) -> Result<SynthesisReport> {
    let [f1, f2, f3] = controls;
    let set = ControlSet::p2(ControlTrace::l2(h, f1), ControlTrace::new(h, f2, regularity)?, ControlTrace::new(h, f3, regularity)?);
    let mut report = SynthesisReport::new(set, t_end);
    report.cascade_log = log;
    report.diagnostics = diag;
    Ok(report)
}

fn check_eps(geom: &LassoGeometry, eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < geom.l().min(geom.a())) {
        return Err(Error::InvalidGeometry(format!("pulse width {eps} must lie in (0, min(a, l))")));
    }
    Ok(())
}

/// Removes the target values at the boundary vertex and the ring midpoint
/// with pulses on `y1` and `y2` that arrive there at `T`. For a velocity
/// target the traces are running integrals of the pulses. Returns the
/// correcting controls and the retargeted data.
#[allow(clippy::too_many_arguments)]
fn endpoint_correction(
    edges: &Edges,
    geom: &LassoGeometry,
    q: &PotentialSpec,
    target: &GraphFunction,
    eps: f64,
    nt: usize,
    velocity: bool,
    diag: &mut Vec<(String, f64)>,
) -> Result<([Vec<f64>; 3], GraphFunction)> {
    let h = edges.h;
    let t_end = nt as f64 * h;
    let grid = grid_for(geom, target)?;
    let unit = |t: f64| plateau_pulse(eps, 0.0, t);
    let stage = || Error::at_stage("endpoint correction");
    let alpha1 = pulse_response(&q.q1, geom.l(), RightBc::Neumann, geom.l(), eps, h, &unit).map_err(stage())?;
    let alpha2 = pulse_response(&q.ring(geom), 2.0 * geom.a(), RightBc::Dirichlet, geom.a(), eps, h, &unit).map_err(stage())?;
    for alpha in [alpha1, alpha2] {
        if alpha.abs() < MIN_PULSE_RESPONSE {
            return Err(Error::DegenerateAmplitude(alpha));
        }
    }
    let (nl, na) = (edges.len[0], edges.len[1]);
    note(diag, "pulse_response_boundary", alpha1);
    note(diag, "pulse_response_midpoint", alpha2);
    let pulse_at = |scale: f64, len: usize| -> Vec<f64> {
        let center = (nt - len) as f64 * h;
        (0..=nt).map(|i| scale * unit(i as f64 * h - center)).collect()
    };
    let pulses = [pulse_at(target.e1[nl] / alpha1, nl), pulse_at(target.e2[na] / alpha2, na), vec![0.0; nt + 1]];
    let (y, yp) = if velocity {
        (pulses.clone().map(|p| cumulative_trapezoid(&p, h)), pulses)
    } else {
        (pulses.clone(), pulses.map(|p| derivative_second_order(&p, h)))
    };
    let controls = edges.controls(&y, &yp, nt);
    let probe = ControlSet::p2(
        ControlTrace::l2(h, controls[0].clone()),
        ControlTrace::l2(h, controls[1].clone()),
        ControlTrace::l2(h, controls[2].clone()),
    );
    let traj = simulate(geom, q, &probe, ProblemKind::P2, t_end, &grid, None, SimOptions::default()).map_err(stage())?;
    let response = if velocity { traj.final_ut } else { traj.final_u };
    let retargeted = target.sub(&response)?;
    note(diag, "residual_at_boundary", retargeted.e1[nl]);
    note(diag, "residual_at_midpoint", retargeted.e2[na]);
    Ok((controls, retargeted))
}

fn add_controls(a: &mut [Vec<f64>; 3], b: &[Vec<f64>; 3]) {
    for (c, p) in a.iter_mut().zip(b) {
        for (v, u) in c.iter_mut().zip(p) {
            *v += u;
        }
    }
}

/// Controls on `[0, T]`, `T = max(a, l) + ε`, whose solution has shape `phi`
/// at `T`. The values of `phi` at the boundary vertex and the ring midpoint
/// are first removed with pulses of half-width `ε`.
pub fn shape_control_p2(phi: &GraphFunction, geom: &LassoGeometry, q: &PotentialSpec, eps: f64) -> Result<SynthesisReport> {
    check_h10(phi)?;
    check_eps(geom, eps)?;
    let h = grid_for(geom, phi)?.h;
    let nt = steps_in(geom.t_upper() + eps, h)?;
    let t_end = nt as f64 * h;
    let edges = Edges::new(geom, q, h, t_end)?;
    let mut log = Vec::new();
    let mut diag = Vec::new();
    let (pulses, target) = endpoint_correction(&edges, geom, q, phi, eps, nt, false, &mut diag)?;

    let mut y: [Vec<f64>; 3] = Default::default();
    let mut yp: [Vec<f64>; 3] = Default::default();
    for (j, values) in edge_values(&target).into_iter().enumerate() {
        let z = edges.trace(j, values, &mut log)?;
        let zp = derivative_second_order(&z, h);
        let start = nt - edges.len[j];
        y[j] = shifted(&z, start, nt);
        yp[j] = shifted(&zp, start, nt);
    }
    let mut controls = edges.controls(&y, &yp, nt);
    add_controls(&mut controls, &pulses);
    for (name, c) in [("f2_at_T", 1), ("f3_at_T", 2)] {
        note(&mut diag, name, controls[c][nt]);
        controls[c][nt] = 0.0;
    }
    finish(controls, h, Regularity::H1ZeroBoth, t_end, log, diag)
}

/// Controls on `[0, T]`, `T = max(a, l) + ε`, whose solution has velocity
/// `psi` at `T`.
pub fn velocity_control_p2(psi: &GraphFunction, geom: &LassoGeometry, q: &PotentialSpec, eps: f64) -> Result<SynthesisReport> {
    check_eps(geom, eps)?;
    let h = grid_for(geom, psi)?.h;
    let nt = steps_in(geom.t_upper() + eps, h)?;
    let t_end = nt as f64 * h;
    let edges = Edges::new(geom, q, h, t_end)?;
    let mut log = Vec::new();
    let mut diag = Vec::new();
    let (ramps, target) = endpoint_correction(&edges, geom, q, psi, eps, nt, true, &mut diag)?;

    let mut y: [Vec<f64>; 3] = Default::default();
    let mut yp: [Vec<f64>; 3] = Default::default();
    for (j, values) in edge_values(&target).into_iter().enumerate() {
        let zp = edges.trace(j, values, &mut log)?;
        let z = cumulative_trapezoid(&zp, h);
        let start = nt - edges.len[j];
        y[j] = shifted(&z, start, nt);
        yp[j] = shifted(&zp, start, nt);
    }
    let mut controls = edges.controls(&y, &yp, nt);
    add_controls(&mut controls, &ramps);
    finish(controls, h, Regularity::H1ZeroStart, t_end, log, diag)
}
