//! Explicit leapfrog simulator for the controlled lasso problems.
//!
//! Problem 1 has a Neumann control `u_x(l,t) = f1(t)` at the boundary vertex
//! and a jump control `u2(0,t) - u1(0,t) = f2(t)` at the interior vertex with
//! `u3(0,t) = u1(0,t)` and zero flux. Problem 2 has `u_x(l,t) = 0` and the
//! jumps `f2`, `f3` on `e2`, `e3` together with the flux `Σ ∂u_j(0,t) = f1(t)`.

mod interval;

pub use interval::{simulate_interval, Bc1d};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{steps_in, Edge, GraphFunction, LassoGeometry, LassoGrid, PotentialSpec};
use crate::wave_rep::ControlTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProblemKind {
    P1,
    P2,
}

/// Controls of either problem on a common time interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSet {
    pub f1: ControlTrace,
    pub f2: ControlTrace,
    pub f3: Option<ControlTrace>,
    pub problem: ProblemKind,
}

impl ControlSet {
    pub fn p1(f1: ControlTrace, f2: ControlTrace) -> Self {
        Self {
            f1,
            f2,
            f3: None,
            problem: ProblemKind::P1,
        }
    }

    pub fn p2(f1: ControlTrace, f2: ControlTrace, f3: ControlTrace) -> Self {
        Self {
            f1,
            f2,
            f3: Some(f3),
            problem: ProblemKind::P2,
        }
    }

    pub fn zeros(problem: ProblemKind, t_end: f64, n: usize) -> Self {
        let z = ControlTrace::zeros(t_end, n);
        match problem {
            ProblemKind::P1 => Self::p1(z.clone(), z),
            ProblemKind::P2 => Self::p2(z.clone(), z.clone(), z),
        }
    }

    pub fn duration(&self) -> f64 {
        self.f1.duration()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            f1: self.f1.scaled(c),
            f2: self.f2.scaled(c),
            f3: self.f3.as_ref().map(|f| f.scaled(c)),
            problem: self.problem,
        }
    }

    /// Sample-wise sum; both sets must share the time grid.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let sum = |a: &ControlTrace, b: &ControlTrace| -> Result<ControlTrace> {
            if a.values.len() != b.values.len() {
                return Err(Error::ShapeMismatch("controls on different time grids".into()));
            }
            Ok(ControlTrace::l2(a.step, a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect()))
        };
        let f3 = match (&self.f3, &other.f3) {
            (Some(a), Some(b)) => Some(sum(a, b)?),
            (None, None) => None,
            _ => return Err(Error::ShapeMismatch("mixing problem kinds".into())),
        };
        Ok(Self {
            f1: sum(&self.f1, &other.f1)?,
            f2: sum(&self.f2, &other.f2)?,
            f3,
            problem: self.problem,
        })
    }
}

/// Recording options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Keep every `stride`-th time level; `None` keeps only the first.
    pub snapshot_stride: Option<usize>,
    pub record_energy: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            snapshot_stride: None,
            record_energy: false,
        }
    }
}

/// Vertex values recorded at every time level.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VertexTraces {
    pub times: Vec<f64>,
    pub u1_0: Vec<f64>,
    pub u2_0: Vec<f64>,
    pub u3_0: Vec<f64>,
    pub u1_l: Vec<f64>,
    pub ring_mid: Vec<f64>,
    /// `max |u2 - u3|` over the ring at each level.
    pub ring_asymmetry: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveTrajectory {
    pub grid: LassoGrid,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub snapshots: Vec<GraphFunction>,
    pub final_u: GraphFunction,
    pub final_ut: GraphFunction,
    pub energy: Vec<(f64, f64)>,
    pub traces: VertexTraces,
    /// Largest discrete flux-balance residual at the interior vertex.
    pub max_flux_residual: f64,
    /// Largest `|u1(0) - u3(0)|` (Problem 1) or jump-condition error.
    pub max_jump_residual: f64,
}

/// Returns `(u(·,T), u_t(·,T))`.
pub fn final_state(traj: &WaveTrajectory) -> (GraphFunction, GraphFunction) {
    (traj.final_u.clone(), traj.final_ut.clone())
}

pub fn simulate_p1(geom: &LassoGeometry, q: &PotentialSpec, controls: &ControlSet, t_end: f64, grid: &LassoGrid) -> Result<WaveTrajectory> {
    simulate(geom, q, controls, ProblemKind::P1, t_end, grid, None, SimOptions::default())
}

pub fn simulate_p2(geom: &LassoGeometry, q: &PotentialSpec, controls: &ControlSet, t_end: f64, grid: &LassoGrid) -> Result<WaveTrajectory> {
    simulate(geom, q, controls, ProblemKind::P2, t_end, grid, None, SimOptions::default())
}

/// Full simulator: optional initial data `(u0, u1)` (otherwise rest) and
/// recording options.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    geom: &LassoGeometry,
    q: &PotentialSpec,
    controls: &ControlSet,
    problem: ProblemKind,
    t_end: f64,
    grid: &LassoGrid,
    initial: Option<(&GraphFunction, &GraphFunction)>,
    opts: SimOptions,
) -> Result<WaveTrajectory> {
    if !(grid.cfl > 0.0 && grid.cfl <= 1.0) {
        return Err(Error::CflViolation(grid.cfl));
    }
    if steps_in(geom.l(), grid.h)? != grid.n1 || steps_in(geom.a(), grid.h)? != grid.n2 {
        return Err(Error::ShapeMismatch("grid does not match geometry".into()));
    }
    let steps = if t_end == 0.0 { 0 } else { steps_in(t_end, grid.dt)? };
    let (h, dt) = (grid.h, grid.dt);
    let (n1, n2) = (grid.n1, grid.n2);
    let lam2 = grid.cfl * grid.cfl;
    let qv = GraphFunction::from_fns(grid, |x| q.q1.eval(x), |x| q.q2.eval(x), |x| q.q3.eval(x));

    let zero = ControlTrace::zeros(1.0, 1);
    let f1 = &controls.f1;
    let f2 = &controls.f2;
    let f3 = match problem {
        ProblemKind::P1 => &zero,
        ProblemKind::P2 => controls.f3.as_ref().unwrap_or(&zero),
    };
    // Neumann data at l and flux source at the vertex
    let (bnd, flux): (&ControlTrace, &ControlTrace) = match problem {
        ProblemKind::P1 => (f1, &zero),
        ProblemKind::P2 => (&zero, f1),
    };

    let (mut prev, mut cur) = match initial {
        Some((u0, _)) => (u0.clone(), u0.clone()),
        None => (GraphFunction::zeros(grid), GraphFunction::zeros(grid)),
    };
    let v0 = initial.map(|(_, v)| v.clone());
    let mut next = GraphFunction::zeros(grid);

    let mut traj = WaveTrajectory {
        grid: *grid,
        t_end,
        snapshot_times: vec![0.0],
        snapshots: vec![cur.clone()],
        final_u: cur.clone(),
        final_ut: GraphFunction::zeros(grid),
        energy: Vec::new(),
        traces: VertexTraces::default(),
        max_flux_residual: 0.0,
        max_jump_residual: 0.0,
    };
    record_traces(&mut traj.traces, 0.0, &cur);
    if opts.record_energy {
        let ut0 = v0.clone().unwrap_or_else(|| GraphFunction::zeros(grid));
        traj.energy.push((0.0, energy_of(&cur, &ut0, &qv)));
    }

    // one extra level for the centered final velocity
    for step in 0..=steps {
        let t = step as f64 * dt;
        let t_new = t + dt;
        let first = step == 0;
        for edge in Edge::ALL {
            let n = if edge == Edge::E1 { n1 } else { n2 };
            let u = cur.edge(edge);
            let up = prev.edge(edge);
            let qe = qv.edge(edge);
            let out = next.edge_mut(edge);
            let last = if edge == Edge::E1 { n } else { n - 1 };
            for i in 1..=last {
                let right = if i == n {
                    // ghost point of the Neumann end at l
                    u[n - 1] + 2.0 * h * bnd.eval(t)
                } else {
                    u[i + 1]
                };
                let lap = lam2 * (right - 2.0 * u[i] + u[i - 1]) - dt * dt * qe[i] * u[i];
                out[i] = if first {
                    let vel = v0.as_ref().map_or(0.0, |v| v.edge(edge)[i]);
                    u[i] + dt * vel + 0.5 * lap
                } else {
                    2.0 * u[i] - up[i] + lap
                };
            }
        }
        // Kirchhoff-Neumann condition at the ring midpoint
        let mid = (4.0 * (next.e2[n2 - 1] + next.e3[n2 - 1]) - next.e2[n2 - 2] - next.e3[n2 - 2]) / 6.0;
        next.e2[n2] = mid;
        next.e3[n2] = mid;
        // interior vertex
        let (g2, g3, g1) = (f2.eval(t_new), f3.eval(t_new), flux.eval(t_new));
        let s: f64 = Edge::ALL
            .iter()
            .map(|e| {
                let u = next.edge(*e);
                4.0 * u[1] - u[2]
            })
            .sum();
        let v = (s - 3.0 * (g2 + g3) - 2.0 * h * g1) / 9.0;
        next.e1[0] = v;
        next.e2[0] = v + g2;
        next.e3[0] = v + g3;

        let flux_res = Edge::ALL
            .iter()
            .map(|e| {
                let u = next.edge(*e);
                (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h)
            })
            .sum::<f64>()
            - g1;
        traj.max_flux_residual = traj.max_flux_residual.max(flux_res.abs());
        let jump_res = (next.e3[0] - next.e1[0] - g3).abs().max((next.e2[0] - next.e1[0] - g2).abs());
        traj.max_jump_residual = traj.max_jump_residual.max(jump_res);

        if next.max_abs().is_nan() || !next.max_abs().is_finite() {
            return Err(Error::NonFinite("lasso simulation"));
        }

        if step == steps {
            // `next` is level M+1 and `prev` is level M-1
            let prev_level = if steps == 0 {
                // centered difference around t=0 needs the reflected level
                next.zip_with(&cur, |n, c| 2.0 * c - n)?
            } else {
                prev.clone()
            };
            traj.final_u = cur.clone();
            traj.final_ut = next.zip_with(&prev_level, |n, p| (n - p) / (2.0 * dt))?;
            if steps == 0 {
                if let Some(v) = &v0 {
                    traj.final_ut = v.clone();
                }
            }
            break;
        }
        if opts.record_energy {
            let ut = next.zip_with(&cur, |n, c| (n - c) / dt)?;
            let mid = next.zip_with(&cur, |n, c| 0.5 * (n + c))?;
            traj.energy.push((t + 0.5 * dt, energy_of(&mid, &ut, &qv)));
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        record_traces(&mut traj.traces, t_new, &cur);
        if let Some(stride) = opts.snapshot_stride {
            if (step + 1) % stride.max(1) == 0 {
                traj.snapshot_times.push(t_new);
                traj.snapshots.push(cur.clone());
            }
        }
    }
    Ok(traj)
}

fn record_traces(tr: &mut VertexTraces, t: f64, u: &GraphFunction) {
    tr.times.push(t);
    tr.u1_0.push(u.e1[0]);
    tr.u2_0.push(u.e2[0]);
    tr.u3_0.push(u.e3[0]);
    tr.u1_l.push(*u.e1.last().unwrap());
    tr.ring_mid.push(*u.e2.last().unwrap());
    let asym = u.e2.iter().zip(&u.e3).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    tr.ring_asymmetry.push(asym);
}

/// `½ ∫ (u_t² + u_x² + q u²)` with the trapezoid rule and one-sided
/// differences per cell for `u_x`.
fn energy_of(u: &GraphFunction, ut: &GraphFunction, q: &GraphFunction) -> f64 {
    let h = u.h;
    Edge::ALL
        .iter()
        .map(|e| {
            let (a, b, c) = (u.edge(*e), ut.edge(*e), q.edge(*e));
            let n = a.len() - 1;
            let pointwise: Vec<f64> = (0..=n).map(|i| b[i] * b[i] + c[i] * a[i] * a[i]).collect();
            let grad: f64 = (0..n).map(|i| ((a[i + 1] - a[i]) / h).powi(2) * h).sum();
            0.5 * (crate::graph::trapezoid(&pointwise, h) + grad)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_grid;

    fn setup(l: f64, a: f64, n: usize) -> (LassoGeometry, LassoGrid, PotentialSpec) {
        let g = LassoGeometry::new(l, a).unwrap();
        let grid = build_grid(&g, n).unwrap();
        let q = PotentialSpec::zero(&g);
        (g, grid, q)
    }

    fn pulse(t: f64) -> f64 {
        if t > 0.0 && t < 0.4 {
            (t * (0.4 - t) / 0.04).powi(3)
        } else {
            0.0
        }
    }

    #[test]
    fn zero_controls_stay_at_rest() {
        let (g, grid, q) = setup(1.0, 1.0, 50);
        let c = ControlSet::zeros(ProblemKind::P1, 2.0, 200);
        let tr = simulate_p1(&g, &q, &c, 2.0, &grid).unwrap();
        let (u, ut) = final_state(&tr);
        assert_eq!(u.max_abs(), 0.0);
        assert_eq!(ut.max_abs(), 0.0);
        assert_eq!(tr.snapshots[0].max_abs(), 0.0);
    }

    #[test]
    fn boundary_pulse_keeps_ring_symmetric_and_is_causal() {
        let (g, grid, q) = setup(1.0, 1.0, 100);
        let f1 = ControlTrace::from_fn(3.0, 3000, pulse);
        let c = ControlSet::p1(f1.clone(), ControlTrace::zeros(3.0, 3000));
        let tr = simulate_p1(&g, &q, &c, 3.0, &grid).unwrap();
        assert!(tr.traces.ring_asymmetry.iter().all(|v| *v == 0.0));
        assert_eq!(tr.max_jump_residual, 0.0);
        // exactly zero outside the numerical domain of dependence, which
        // travels one cell per step, and negligible ahead of the physical front
        let early = simulate_p1(&g, &q, &c, 0.3, &grid).unwrap();
        let (u, _) = final_state(&early);
        for (i, v) in u.e1.iter().enumerate() {
            let x = i as f64 * grid.h;
            if x < 1.0 - 0.6 - 2.0 * grid.h {
                assert_eq!(*v, 0.0);
            } else if x < 1.0 - 0.3 - 0.1 {
                assert!(v.abs() < 1e-9, "x={x} v={v}");
            }
        }
        assert_eq!(u.e2.iter().chain(&u.e3).fold(0.0_f64, |m, v| m.max(v.abs())), 0.0);
        let (u, _) = final_state(&simulate_p1(&g, &q, &c, 0.6, &grid).unwrap());
        // incoming wave from the Neumann end: u = F(t - (l - x))
        let big_f = |t: f64| -> f64 {
            let n = 2000;
            let ds = t.max(0.0) / n as f64;
            (0..=n).map(|k| if k == 0 || k == n { 0.5 } else { 1.0 } * pulse(k as f64 * ds)).sum::<f64>() * ds
        };
        let x = 0.7;
        let i = (x / grid.h).round() as usize;
        assert!((u.e1[i] - big_f(0.6 - (1.0 - x))).abs() < 2e-4, "{} {}", u.e1[i], big_f(0.3));
    }

    #[test]
    fn symmetric_jumps_keep_ring_symmetric() {
        let (g, grid, q) = setup(1.0, 0.5, 100);
        let f = ControlTrace::from_fn(2.0, 2000, pulse);
        let c = ControlSet::p2(ControlTrace::zeros(2.0, 2000), f.clone(), f);
        let tr = simulate_p2(&g, &q, &c, 2.0, &grid).unwrap();
        assert!(tr.traces.ring_asymmetry.iter().all(|v| *v == 0.0));
        assert!(tr.final_u.max_abs() > 1e-3);
        assert!(tr.max_flux_residual < 1e-8);
    }

    fn energy_drift(n: usize) -> (f64, usize) {
        let (g, grid, _) = setup(1.0, 1.0, n);
        let q = PotentialSpec::constant(&g, 1.0);
        let f1 = ControlTrace::from_fn(4.0, 4000, pulse);
        let f2 = ControlTrace::from_fn(4.0, 4000, |t| pulse(t - 0.1));
        let c = ControlSet::p1(f1, f2);
        let opts = SimOptions {
            snapshot_stride: Some(100),
            record_energy: true,
        };
        let tr = simulate(&g, &q, &c, ProblemKind::P1, 4.0, &grid, None, opts).unwrap();
        let after: Vec<f64> = tr.energy.iter().filter(|(t, _)| *t > 0.6).map(|(_, e)| *e).collect();
        let (lo, hi) = after.iter().fold((f64::MAX, f64::MIN), |(lo, hi), e| (lo.min(*e), hi.max(*e)));
        assert!(hi > 0.0);
        ((hi - lo) / hi, tr.snapshots.len())
    }

    #[test]
    fn energy_conserved_after_controls_stop() {
        let (d1, snaps) = energy_drift(100);
        let (d2, _) = energy_drift(200);
        assert!(d1 < 5e-3 && d1 / d2 > 3.0, "{d1} {d2}");
        assert_eq!(snaps, 1 + 800 / 100);
    }

    #[test]
    fn free_evolution_from_initial_data() {
        // constant initial displacement is a steady state for q = 0
        let (g, grid, q) = setup(1.0, 1.0, 50);
        let one = GraphFunction::zeros(&grid).map(|_| 1.0);
        let zero = GraphFunction::zeros(&grid);
        let c = ControlSet::zeros(ProblemKind::P1, 1.0, 10);
        let tr = simulate(&g, &q, &c, ProblemKind::P1, 1.0, &grid, Some((&one, &zero)), SimOptions::default()).unwrap();
        assert!(tr.final_u.sub(&one).unwrap().max_abs() < 1e-12);
        assert!(tr.final_ut.max_abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (g, mut grid, q) = setup(1.0, 1.0, 50);
        let c = ControlSet::zeros(ProblemKind::P1, 1.0, 10);
        assert!(matches!(simulate_p1(&g, &q, &c, 1.003, &grid), Err(Error::NonCommensurate { .. })));
        grid.cfl = 1.5;
        assert!(matches!(simulate_p1(&g, &q, &c, 1.0, &grid), Err(Error::CflViolation(_))));
    }
}
