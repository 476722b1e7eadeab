//! Cascade for the problem with a Neumann control at the boundary vertex and
//! a jump control between the ring edges and `e1` at the interior vertex.
//!
//! The vertex traces `y_j(t) = u_j(0, t)` vanish before `t = l` and are
//! stored as functions of `τ = t - l ∈ [0, a]`.

use crate::error::{Error, Result};
use crate::fdsim::{simulate, ControlSet, ProblemKind, SimOptions};
use crate::graph::{check_h10, cumulative_trapezoid, derivative_second_order, steps_in, GraphFunction, LassoGeometry, LassoGrid, PotentialSpec};
use crate::kernels::{solve_goursat_folded, solve_goursat_reflected_neumann, Kernel, KernelBc};
use crate::wave_rep::{ControlTrace, Regularity};

use super::bump::plateau_pulse;
use super::{free_end_images, grid_for, image_dz, image_value, neumann_images, note, shifted, solve_logged, StageLog, SynthesisReport};

/// Amplitudes of the midpoint pulse below this are treated as degenerate.
const MIN_PULSE_RESPONSE: f64 = 1e-8;

struct Cascade {
    h: f64,
    nl: usize,
    na: usize,
    k1: Kernel,
    k2: Kernel,
    k3: Kernel,
    w: Kernel,
}

impl Cascade {
    fn new(geom: &LassoGeometry, q: &PotentialSpec, h: f64) -> Result<Self> {
        let horizon = geom.t_star();
        let stage = Error::at_stage("kernels");
        let build = || -> Result<Self> {
            Ok(Self {
                h,
                nl: steps_in(geom.l(), h)?,
                na: steps_in(geom.a(), h)?,
                k1: solve_goursat_folded(&q.q1, KernelBc::Dirichlet, horizon, h)?,
                k2: solve_goursat_folded(&q.q2, KernelBc::Dirichlet, geom.a(), h)?,
                k3: solve_goursat_folded(&q.q3, KernelBc::Dirichlet, geom.a(), h)?,
                w: solve_goursat_reflected_neumann(&q.q1, horizon, h)?,
            })
        };
        build().map_err(stage)
    }

    fn nt(&self) -> usize {
        self.nl + self.na
    }

    /// Vertex trace on a ring edge from its values at `T`:
    /// `Z(τ) + ∫_0^τ k(a-τ, a-σ) Z(σ) dσ = φ(a-τ)`.
    fn ring_trace(&self, k: &Kernel, phi: &[f64], name: &str, log: &mut Vec<StageLog>) -> Result<Vec<f64>> {
        let na = self.na;
        let rhs = (0..=na).map(|i| phi[na - i]).collect();
        solve_logged(name, self.h, &|i, j| k.at(na - i, na - j), rhs, log)
    }

    /// Boundary control on `[0, a]` enforcing zero total flux at the interior
    /// vertex for the given vertex traces `y = (y1, y2, y3)` and derivatives.
    fn boundary_flux(&self, y: [&[f64]; 3], yp: [&[f64]; 3], log: &mut Vec<StageLog>) -> Result<Vec<f64>> {
        let (h, nl, na) = (self.h, self.nl, self.na);
        let kernels = [&self.k1, &self.k2, &self.k3];
        let known: Vec<f64> = (0..=na)
            .map(|tau| {
                let mut acc: f64 = (0..3).map(|j| image_dz(kernels[j], y[j], yp[j], 0, tau, false)).sum();
                let mut n = 1;
                while 2 * n * nl <= tau {
                    let sign = if n % 2 == 0 { 2.0 } else { -2.0 };
                    acc += sign * image_dz(&self.k1, y[0], yp[0], 2 * n * nl, tau, true);
                    n += 1;
                }
                acc
            })
            .collect();

        let w_ll = self.w.at(nl, nl);
        let dw: Vec<f64> = (0..=na).map(|r| self.w.dx_at(nl, nl + r)).collect();
        let omega = cumulative_trapezoid(&dw, h);
        let kernel = |i: usize, j: usize| w_ll - omega[i - j];

        // reflections off the boundary vertex return after 2l, so each pass
        // extends the range where the delayed terms are exact by 2l
        let passes = na / (2 * nl) + 1;
        let mut f1 = vec![0.0; na + 1];
        for pass in 0..passes {
            let big_f = cumulative_trapezoid(&f1, h);
            let rhs = (0..=na)
                .map(|tau| {
                    let mut delayed = 0.0;
                    let mut m = 1;
                    while 2 * m * nl <= tau {
                        let sign = if m % 2 == 0 { 2.0 } else { -2.0 };
                        delayed -= sign * image_dz(&self.w, &big_f, &f1, (2 * m + 1) * nl, tau + nl, true);
                        m += 1;
                    }
                    -0.5 * (known[tau] + delayed)
                })
                .collect();
            let name = if passes == 1 {
                "boundary flux".to_string()
            } else {
                format!("boundary flux pass {}", pass + 1)
            };
            f1 = solve_logged(&name, h, &kernel, rhs, log)?;
        }
        Ok(f1)
    }

    /// Solves for `G(x) = P(a + x)` on `x ∈ [0, l]` so that the `e1`
    /// component at `T` equals `chi`, given `P` on `[0, a]` and the `e1`
    /// vertex trace `h1` (as a function of `τ`).
    fn boundary_tail(&self, chi: &[f64], p_known: &[f64], h1: &[f64], name: &str, log: &mut Vec<StageLog>) -> Result<Vec<f64>> {
        let (h, nl, na) = (self.h, self.nl, self.na);
        let nt = self.nt();
        let w = &self.w;
        let rhs = (0..=nl)
            .map(|i| {
                let mut tail = 0.0;
                for s in nl..=nt {
                    let wt = if s == nl || s == nt { 0.5 } else { 1.0 };
                    tail += wt * w.at(nl - i, s) * p_known[nt - s];
                }
                let mut known = h * tail;
                // the first image is the direct one, whose head is the unknown
                for (z, sign) in neumann_images(nl, i, nt).into_iter().skip(1) {
                    known += sign * image_value(w, p_known, z, nt);
                }
                for (z, sign) in free_end_images(nl, i, na) {
                    known += sign * image_value(&self.k1, h1, z, na);
                }
                chi[i] - known
            })
            .collect();
        solve_logged(name, h, &|i, j| w.at(nl - i, nl - j), rhs, log)
    }
}

/// Jump control `y2 - y3` delayed by `l` on `[0, T]`.
fn jump_control(c: &Cascade, y2: &[f64], y3: &[f64]) -> Vec<f64> {
    let diff: Vec<f64> = y2.iter().zip(y3).map(|(a, b)| a - b).collect();
    shifted(&diff, c.nl, c.nt())
}

/// Removes the target value at the ring midpoint with a jump pulse centered
/// at `t = l`. For a velocity target the jump control is the running
/// integral of the pulse, so the solution's velocity near the midpoint is
/// flat at `T`. Returns the scaled jump control and the retargeted data.
fn midpoint_correction(
    geom: &LassoGeometry,
    q: &PotentialSpec,
    grid: &LassoGrid,
    target: &GraphFunction,
    velocity: bool,
    diag: &mut Vec<(String, f64)>,
) -> Result<(Vec<f64>, GraphFunction)> {
    let h = grid.h;
    let (na, nt) = (grid.n2, grid.n1 + grid.n2);
    let t_end = nt as f64 * h;
    let eps = geom.l().min(geom.a()) / 2.0;
    let pulse: Vec<f64> = (0..=nt).map(|i| plateau_pulse(eps, geom.l(), i as f64 * h)).collect();
    let unit = if velocity { cumulative_trapezoid(&pulse, h) } else { pulse };
    let probe = ControlSet::p1(ControlTrace::zeros(t_end, nt), ControlTrace::l2(h, unit.clone()));
    let traj = simulate(geom, q, &probe, ProblemKind::P1, t_end, grid, None, SimOptions::default())
        .map_err(Error::at_stage("midpoint correction"))?;
    let response = if velocity { traj.final_ut } else { traj.final_u };
    let alpha = response.e2[na];
    if alpha.abs() < MIN_PULSE_RESPONSE {
        return Err(Error::DegenerateAmplitude(alpha));
    }
    let scale = target.e2[na] / alpha;
    note(diag, "pulse_response", alpha);
    note(diag, "pulse_scale", scale);
    let retargeted = target.sub(&response.scaled(scale))?;
    Ok((unit.iter().map(|u| scale * u).collect(), retargeted))
}

fn report(f1: Vec<f64>, f2: Vec<f64>, h: f64, regularity: Regularity, log: Vec<StageLog>, diag: Vec<(String, f64)>) -> Result<SynthesisReport> {
    let t_end = (f1.len() - 1) as f64 * h;
    let controls = ControlSet::p1(ControlTrace::l2(h, f1), ControlTrace::new(h, f2, regularity)?);
    let mut report = SynthesisReport::new(controls, t_end);
    report.cascade_log = log;
    report.diagnostics = diag;
    Ok(report)
}

/// Controls on `[0, a + l]` whose solution has shape `phi` at `T = a + l`.
pub fn shape_control_p1(phi: &GraphFunction, geom: &LassoGeometry, q: &PotentialSpec) -> Result<SynthesisReport> {
    check_h10(phi)?;
    let grid = grid_for(geom, phi)?;
    let c = Cascade::new(geom, q, grid.h)?;
    let (h, nl, na, nt) = (c.h, c.nl, c.na, c.nt());
    let mut log = Vec::new();
    let mut diag = Vec::new();
    let (pulse, target) = midpoint_correction(geom, q, &grid, phi, false, &mut diag)?;

    let y2 = c.ring_trace(&c.k2, &target.e2, "ring e2", &mut log)?;
    let y3 = c.ring_trace(&c.k3, &target.e3, "ring e3", &mut log)?;
    let y1 = y3.clone();
    let [yp1, yp2, yp3] = [&y1, &y2, &y3].map(|y| derivative_second_order(y, h));

    let head = c.boundary_flux([&y1, &y2, &y3], [&yp1, &yp2, &yp3], &mut log)?;
    let big_f = cumulative_trapezoid(&head, h);
    let g = c.boundary_tail(&target.e1, &big_f, &y1, "boundary tail", &mut log)?;
    note(&mut diag, "tail_junction", (g[0] - big_f[na]).abs());
    let dg = derivative_second_order(&g, h);
    let mut f1 = head;
    f1.extend_from_slice(&dg[1..=nl]);

    let mut f2 = jump_control(&c, &y2, &y3);
    note(&mut diag, "f2_at_l", f2[nl]);
    note(&mut diag, "f2_at_T", f2[nt]);
    f2[nl] = 0.0;
    f2[nt] = 0.0;
    for (v, u) in f2.iter_mut().zip(&pulse) {
        *v += u;
    }
    report(f1, f2, h, Regularity::H1ZeroBoth, log, diag)
}

/// Controls on `[0, a + l]` whose solution has velocity `psi` at
/// `T = a + l`.
pub fn velocity_control_p1(psi: &GraphFunction, geom: &LassoGeometry, q: &PotentialSpec) -> Result<SynthesisReport> {
    let grid = grid_for(geom, psi)?;
    let c = Cascade::new(geom, q, grid.h)?;
    let (h, nl, na, nt) = (c.h, c.nl, c.na, c.nt());
    let mut log = Vec::new();
    let mut diag = Vec::new();
    let (ramp, target) = midpoint_correction(geom, q, &grid, psi, true, &mut diag)?;

    let yp2 = c.ring_trace(&c.k2, &target.e2, "ring e2", &mut log)?;
    let yp3 = c.ring_trace(&c.k3, &target.e3, "ring e3", &mut log)?;
    let yp1 = yp3.clone();
    let [y1, y2, y3] = [&yp1, &yp2, &yp3].map(|y| cumulative_trapezoid(y, h));

    let head = c.boundary_flux([&y1, &y2, &y3], [&yp1, &yp2, &yp3], &mut log)?;
    let g = c.boundary_tail(&target.e1, &head, &yp1, "boundary tail", &mut log)?;
    note(&mut diag, "tail_junction", (g[0] - head[na]).abs());
    let mut f1 = head;
    f1.extend_from_slice(&g[1..=nl]);

    let mut f2 = jump_control(&c, &y2, &y3);
    for (v, u) in f2.iter_mut().zip(&ramp) {
        *v += u;
    }
    note(&mut diag, "f2_at_T", f2[nt]);
    report(f1, f2, h, Regularity::H1ZeroStart, log, diag)
}
