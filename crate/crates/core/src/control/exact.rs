//! Exact controllability by combining a shape and a velocity control,
//! reflected about the end of their common interval and averaged.
//!
//! If `f` steers rest to `(A, ·)` at `T`, its odd extension about `T` steers
//! rest to `S(T)(2A, 0)` at `2T`, where `S` is the free evolution. If `g`
//! steers rest to `(·, D)`, its even extension steers rest to `S(T)(0, 2D)`.
//! The average therefore reaches `S(T)(A, D)`, and choosing
//! `(A, D) = S(-T)(φ1, φ2)` reaches the target.

use crate::error::{Error, Result};
use crate::fdsim::{simulate, ControlSet, ProblemKind, SimOptions};
use crate::graph::{steps_in, GraphFunction, LassoGeometry, PotentialSpec, TargetState};
use crate::wave_rep::{ControlTrace, Regularity};

use super::{grid_for, p1, p2, SynthesisReport};

/// `S(-T)(φ1, φ2)` for the uncontrolled problem, by running the free
/// evolution forward from `(φ1, -φ2)` and flipping the final velocity.
pub fn free_backward(
    phi1: &GraphFunction,
    phi2: &GraphFunction,
    geom: &LassoGeometry,
    q: &PotentialSpec,
    t: f64,
) -> Result<(GraphFunction, GraphFunction)> {
    let grid = grid_for(geom, phi1)?;
    let n = steps_in(t, grid.h)?;
    let rest = ControlSet::zeros(ProblemKind::P1, t, n);
    let flipped = phi2.scaled(-1.0);
    let traj = simulate(geom, q, &rest, ProblemKind::P1, t, &grid, Some((phi1, &flipped)), SimOptions::default())?;
    Ok((traj.final_u, traj.final_ut.scaled(-1.0)))
}

/// Extends samples on `[0, T]` to `[0, 2T]`, oddly (value 0 at `T`) or
/// evenly about `T`.
fn reflect(values: &[f64], odd: bool) -> Vec<f64> {
    let n = values.len() - 1;
    let sign = if odd { -1.0 } else { 1.0 };
    let mut out = values.to_vec();
    if odd {
        out[n] = 0.0;
    }
    out.extend((1..=n).map(|i| sign * values[n - i]));
    out
}

fn combine(shape: &ControlTrace, velocity: &ControlTrace, regularity: Regularity) -> Result<ControlTrace> {
    let a = reflect(&shape.values, true);
    let b = reflect(&velocity.values, false);
    let avg = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
    match regularity {
        Regularity::L2 => Ok(ControlTrace::l2(shape.step, avg)),
        r => ControlTrace::new(shape.step, avg, r),
    }
}

fn merge(shape: SynthesisReport, velocity: SynthesisReport, controls: ControlSet, horizon: f64) -> SynthesisReport {
    let mut report = SynthesisReport::new(controls, horizon);
    for (prefix, part) in [("shape", &shape), ("velocity", &velocity)] {
        report.cascade_log.extend(part.cascade_log.iter().map(|s| super::StageLog {
            stage: format!("{prefix}: {}", s.stage),
            residual: s.residual,
        }));
        report.diagnostics.extend(part.diagnostics.iter().map(|(n, v)| (format!("{prefix}: {n}"), *v)));
    }
    report
}

/// Controls on `[0, 2(a + l)]` steering rest to `target`.
pub fn exact_control_p1(target: &TargetState, geom: &LassoGeometry, q: &PotentialSpec) -> Result<SynthesisReport> {
    let t = geom.t_star();
    let (a, d) = free_backward(&target.phi1, &target.phi2, geom, q, t).map_err(Error::at_stage("backward evolution"))?;
    let shape = p1::shape_control_p1(&a, geom, q).map_err(Error::at_stage("shape control"))?;
    let velocity = p1::velocity_control_p1(&d, geom, q).map_err(Error::at_stage("velocity control"))?;
    let (s, v) = (&shape.controls, &velocity.controls);
    let controls = ControlSet::p1(combine(&s.f1, &v.f1, Regularity::L2)?, combine(&s.f2, &v.f2, Regularity::H1ZeroBoth)?);
    let horizon = 2.0 * shape.time_horizon;
    Ok(merge(shape, velocity, controls, horizon))
}

/// Controls on `[0, 2T]`, `T = max(a, l) + ε`, steering rest to `target`.
pub fn exact_control_p2(target: &TargetState, geom: &LassoGeometry, q: &PotentialSpec, eps: f64) -> Result<SynthesisReport> {
    let h = target.phi1.h;
    let t = steps_in(geom.t_upper() + eps, h)? as f64 * h;
    let (a, d) = free_backward(&target.phi1, &target.phi2, geom, q, t).map_err(Error::at_stage("backward evolution"))?;
    let shape = p2::shape_control_p2(&a, geom, q, eps).map_err(Error::at_stage("shape control"))?;
    let velocity = p2::velocity_control_p2(&d, geom, q, eps).map_err(Error::at_stage("velocity control"))?;
    let (s, v) = (&shape.controls, &velocity.controls);
    let (vf3, sf3) = (v.f3.as_ref().expect("three controls"), s.f3.as_ref().expect("three controls"));
    let controls = ControlSet::p2(
        combine(&s.f1, &v.f1, Regularity::L2)?,
        combine(&s.f2, &v.f2, Regularity::H1ZeroBoth)?,
        combine(sf3, vf3, Regularity::H1ZeroBoth)?,
    );
    let horizon = 2.0 * shape.time_horizon;
    Ok(merge(shape, velocity, controls, horizon))
}
