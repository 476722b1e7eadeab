//! Shape, velocity and exact control synthesis for both lasso problems.

mod bump;
mod exact;
mod p1;
mod p2;

pub use bump::{bump_control, hat};
pub use exact::{exact_control_p1, exact_control_p2, free_backward};
pub use p1::{shape_control_p1, velocity_control_p1};
pub use p2::{shape_control_p2, velocity_control_p2};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fdsim::{simulate, ControlSet, SimOptions};
use crate::graph::{norm_h, norm_h1, GraphFunction, LassoGeometry, LassoGrid, PotentialSpec, TargetState};
use crate::kernels::Kernel;
use crate::volterra::{collocation_residual, solve_vesk, VeskProblem};

/// Residual of one Volterra solve in the cascade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageLog {
    pub stage: String,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlNorms {
    pub f1_l2: f64,
    pub f2_h1: f64,
    pub f3_h1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifiedError {
    /// `‖u(T) - φ1‖_{H¹} / ‖φ1‖_{H¹}` (absolute when the target vanishes).
    pub shape_rel_h1: f64,
    /// `‖u_t(T) - φ2‖ / ‖φ2‖` (absolute when the target vanishes).
    pub velocity_rel_l2: f64,
    /// `‖(u, u_t)(T) - (φ1, φ2)‖ / ‖(φ1, φ2)‖` in `H¹ × L²`.
    pub combined_rel: f64,
    /// `(‖f1‖ + ‖f2‖_{H¹} [+ ‖f3‖_{H¹}]) / (‖φ1‖_{H¹} + ‖φ2‖)`.
    pub stability_quotient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub controls: ControlSet,
    pub time_horizon: f64,
    pub norms: ControlNorms,
    pub cascade_log: Vec<StageLog>,
    /// Named scalar diagnostics: bump amplitudes, junction mismatches,
    /// endpoint values before clamping.
    pub diagnostics: Vec<(String, f64)>,
    pub verified_error: Option<VerifiedError>,
}

impl SynthesisReport {
    pub(crate) fn new(controls: ControlSet, time_horizon: f64) -> Self {
        let norms = norms_of(&controls);
        Self {
            controls,
            time_horizon,
            norms,
            cascade_log: Vec::new(),
            diagnostics: Vec::new(),
            verified_error: None,
        }
    }

    pub fn max_stage_residual(&self) -> f64 {
        self.cascade_log.iter().fold(0.0_f64, |m, s| m.max(s.residual))
    }

    pub fn diagnostic(&self, name: &str) -> Option<f64> {
        self.diagnostics.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

pub(crate) fn norms_of(c: &ControlSet) -> ControlNorms {
    ControlNorms {
        f1_l2: c.f1.l2_norm(),
        f2_h1: c.f2.h1_norm(),
        f3_h1: c.f3.as_ref().map(|f| f.h1_norm()),
    }
}

/// Simulates `controls` up to `t` and measures the final state against
/// `target`.
pub fn verified_error(
    controls: &ControlSet,
    t: f64,
    target: &TargetState,
    geom: &LassoGeometry,
    q: &PotentialSpec,
    grid: &LassoGrid,
) -> Result<VerifiedError> {
    let traj = simulate(geom, q, controls, controls.problem, t, grid, None, SimOptions::default())?;
    let du = traj.final_u.sub(&target.phi1)?;
    let dv = traj.final_ut.sub(&target.phi2)?;
    let rel = |err: f64, scale: f64| if scale > 0.0 { err / scale } else { err };
    let (n1, n2) = (norm_h1(&target.phi1), norm_h(&target.phi2));
    let (e1, e2) = (norm_h1(&du), norm_h(&dv));
    let c = norms_of(controls);
    let control_size = c.f1_l2 + c.f2_h1 + c.f3_h1.unwrap_or(0.0);
    Ok(VerifiedError {
        shape_rel_h1: rel(e1, n1),
        velocity_rel_l2: rel(e2, n2),
        combined_rel: rel((e1 * e1 + e2 * e2).sqrt(), (n1 * n1 + n2 * n2).sqrt()),
        stability_quotient: rel(control_size, n1 + n2),
    })
}

/// Runs the simulator on the report's controls and fills
/// [`SynthesisReport::verified_error`].
pub fn verify(report: &SynthesisReport, target: &TargetState, geom: &LassoGeometry, q: &PotentialSpec, grid: &LassoGrid) -> Result<SynthesisReport> {
    let mut out = report.clone();
    out.verified_error = Some(verified_error(&report.controls, report.time_horizon, target, geom, q, grid)?);
    Ok(out)
}

/// Solves a Volterra equation whose kernel is given at grid nodes and logs
/// its collocation residual.
pub(crate) fn solve_logged(
    name: &str,
    h: f64,
    kernel: &dyn Fn(usize, usize) -> f64,
    rhs: Vec<f64>,
    log: &mut Vec<StageLog>,
) -> Result<Vec<f64>> {
    let k = |t: f64, s: f64| kernel((t / h).round() as usize, (s / h).round() as usize);
    let p = VeskProblem::new(0.0, h, &k, rhs, 1.0);
    let y = solve_vesk(&p)?;
    log.push(StageLog {
        stage: name.to_string(),
        residual: collocation_residual(&p, &y),
    });
    Ok(y)
}

/// Sample of a causal function: zero for negative index.
pub(crate) fn causal_at(f: &[f64], i: isize) -> f64 {
    if i < 0 {
        0.0
    } else {
        f.get(i as usize).copied().unwrap_or(0.0)
    }
}

/// `f(t - z) + ∫_z^t k(z,s) f(t - s) ds` at grid indices, with `f` vanishing
/// for negative arguments and the integral cut where it does.
pub(crate) fn image_value(k: &Kernel, f: &[f64], z: usize, t: usize) -> f64 {
    if z > t {
        return 0.0;
    }
    let mut acc = 0.0;
    // f(t - s) is only read where it is sampled; callers guarantee that the
    // samples cover every argument the integral needs
    for s in z..=t {
        let arg = t - s;
        if arg >= f.len() {
            continue;
        }
        let w = if s == z || s == t { 0.5 } else { 1.0 };
        acc += w * k.at(z, s) * f[arg];
    }
    let h = k.h;
    causal_at(f, t as isize - z as isize) + h * acc
}

/// `∂_z` of [`image_value`]:
/// `-f'(t-z) - k(z,z) f(t-z) + ∫_z^t k_x(z,s) f(t-s) ds`.
/// `fp` holds samples of `f'`; its value at zero argument is halved when
/// `half_at_zero` is set, the mean of the one-sided limits.
pub(crate) fn image_dz(k: &Kernel, f: &[f64], fp: &[f64], z: usize, t: usize, half_at_zero: bool) -> f64 {
    if z > t {
        return 0.0;
    }
    let h = k.h;
    let arg = t - z;
    let mut fpv = causal_at(fp, arg as isize);
    if arg == 0 && half_at_zero {
        fpv *= 0.5;
    }
    let mut acc = 0.0;
    for s in z..=t {
        let a = t - s;
        if a >= f.len() {
            continue;
        }
        let w = if s == z || s == t { 0.5 } else { 1.0 };
        acc += w * k.dx_at(z, s) * f[a];
    }
    -fpv - k.at(z, z) * causal_at(f, arg as isize) + h * acc
}

/// Image points `(index, sign)` of the interval with Dirichlet data at 0 and
/// `u_x = 0` at `l` (`nl` steps long), restricted to `z ≤ t`.
pub(crate) fn free_end_images(nl: usize, x: usize, t: usize) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let mut n = 0usize;
    loop {
        let c = 2 * n * nl;
        if c > t + x {
            break;
        }
        let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
        if n >= 1 && c >= x && c - x <= t {
            out.push((c - x, -parity));
        }
        if c + x <= t {
            out.push((c + x, parity));
        }
        n += 1;
    }
    out
}

/// Image points of the Neumann-control representation on `e1`.
pub(crate) fn neumann_images(nl: usize, x: usize, t: usize) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let mut m = 0usize;
    loop {
        let c = (2 * m + 1) * nl;
        if c > t + x {
            break;
        }
        let parity = if m % 2 == 0 { 1.0 } else { -1.0 };
        if c >= x && c - x <= t {
            out.push((c - x, parity));
        }
        if c + x <= t {
            out.push((c + x, -parity));
        }
        m += 1;
    }
    out
}

/// Adds `(name, value)` to a diagnostics list.
pub(crate) fn note(diag: &mut Vec<(String, f64)>, name: &str, value: f64) {
    diag.push((name.to_string(), value));
}

/// Courant number of the simulations used to retarget. At 1 the leapfrog
/// scheme carries kinks without dispersion.
pub const RETARGET_CFL: f64 = 1.0;

/// Simulation grid matching the sampling step of a target.
pub(crate) fn grid_for(geom: &LassoGeometry, phi: &GraphFunction) -> Result<LassoGrid> {
    let h = phi.h;
    let grid = LassoGrid {
        h,
        n1: crate::graph::steps_in(geom.l(), h)?,
        n2: crate::graph::steps_in(geom.a(), h)?,
        dt: RETARGET_CFL * h,
        cfl: RETARGET_CFL,
    };
    if phi.e1.len() != grid.n1 + 1 || phi.e2.len() != grid.n2 + 1 || phi.e3.len() != grid.n2 + 1 {
        return Err(crate::error::Error::ShapeMismatch("target does not match the geometry".into()));
    }
    Ok(grid)
}

/// Samples `f` at `step` on `[0, n step]`, shifted right by `shift` steps
/// and padded with zeros.
pub(crate) fn shifted(f: &[f64], shift: usize, n: usize) -> Vec<f64> {
    (0..=n).map(|i| if i < shift { 0.0 } else { f.get(i - shift).copied().unwrap_or(0.0) }).collect()
}
