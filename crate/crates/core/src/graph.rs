//! Geometry, grids, potentials and sampled functions on the lasso graph.
//!
//! The lasso is modelled as a three-edge star joined at the interior vertex
//! `x = 0`: the pendant edge `e1 = (0, l)` ends at the boundary vertex
//! `x = l`, and the ring of circumference `2a` is split into two edges
//! `e2, e3 = (0, a)` that meet again at an artificial Kirchhoff-Neumann vertex
//! at `x = a`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default Courant number `dt / h` used by the simulator.
pub const DEFAULT_CFL: f64 = 0.5;

/// Relative tolerance used when checking that a length is a whole number of
/// grid steps.
const COMMENSURATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Edge {
    E1,
    E2,
    E3,
}

impl Edge {
    pub const ALL: [Edge; 3] = [Edge::E1, Edge::E2, Edge::E3];

    pub fn index(self) -> usize {
        match self {
            Edge::E1 => 0,
            Edge::E2 => 1,
            Edge::E3 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Edge::E1 => "e1",
            Edge::E2 => "e2",
            Edge::E3 => "e3",
        }
    }
}

/// Edge lengths of the lasso.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoGeometry {
    l: f64,
    a: f64,
}

impl LassoGeometry {
    pub fn new(l: f64, a: f64) -> Result<Self> {
        if !(l.is_finite() && a.is_finite() && l > 0.0 && a > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "edge lengths must be positive and finite (l={l}, a={a})"
            )));
        }
        Ok(Self { l, a })
    }

    /// Length of the pendant edge.
    pub fn l(&self) -> f64 {
        self.l
    }

    /// Half circumference of the ring (length of `e2` and `e3`).
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Control half-time of the boundary/interior problem, `a + l`.
    pub fn t_star(&self) -> f64 {
        self.a + self.l
    }

    /// Minimal control time of the three-control interior problem, `max(a, l)`.
    pub fn t_upper(&self) -> f64 {
        self.a.max(self.l)
    }

    pub fn edge_length(&self, edge: Edge) -> f64 {
        match edge {
            Edge::E1 => self.l,
            Edge::E2 | Edge::E3 => self.a,
        }
    }

    /// Total length `l + 2a`.
    pub fn total_length(&self) -> f64 {
        self.l + 2.0 * self.a
    }
}

/// Uniform discretization of the lasso.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoGrid {
    pub h: f64,
    pub n1: usize,
    pub n2: usize,
    pub dt: f64,
    pub cfl: f64,
}

/// Number of whole steps of size `step` in `length`, or an error if the
/// length is not commensurate with the step.
pub fn steps_in(length: f64, step: f64) -> Result<usize> {
    let ratio = length / step;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > COMMENSURATE_TOL * ratio.max(1.0) {
        return Err(Error::NonCommensurate { length, step });
    }
    Ok(n as usize)
}

/// Builds the grid with `h = 1 / n_per_unit`.
pub fn build_grid(geom: &LassoGeometry, n_per_unit: usize) -> Result<LassoGrid> {
    build_grid_with_cfl(geom, n_per_unit, DEFAULT_CFL)
}

pub fn build_grid_with_cfl(geom: &LassoGeometry, n_per_unit: usize, cfl: f64) -> Result<LassoGrid> {
    if n_per_unit == 0 {
        return Err(Error::InvalidGeometry("resolution must be positive".into()));
    }
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::CflViolation(cfl));
    }
    let h = 1.0 / n_per_unit as f64;
    let n1 = steps_in(geom.l(), h)?;
    let n2 = steps_in(geom.a(), h)?;
    Ok(LassoGrid {
        h,
        n1,
        n2,
        dt: cfl * h,
        cfl,
    })
}

impl LassoGrid {
    pub fn nodes(&self, edge: Edge) -> usize {
        match edge {
            Edge::E1 => self.n1 + 1,
            Edge::E2 | Edge::E3 => self.n2 + 1,
        }
    }

    /// Number of grid steps in a time interval of length `t`.
    pub fn steps(&self, t: f64) -> Result<usize> {
        steps_in(t, self.h)
    }
}

/// Uniform samples of a scalar function on `[0, step * (len - 1)]` with
/// piecewise-linear interpolation in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFn {
    pub step: f64,
    pub values: Vec<f64>,
}

impl SampledFn {
    pub fn new(step: f64, values: Vec<f64>) -> Self {
        debug_assert!(step > 0.0 && !values.is_empty());
        Self { step, values }
    }

    pub fn from_fn(length: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let step = length / n as f64;
        Self::new(step, (0..=n).map(|i| f(i as f64 * step)).collect())
    }

    pub fn zeros(length: f64, n: usize) -> Self {
        Self::new(length / n as f64, vec![0.0; n + 1])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    /// Linear interpolation; arguments outside the sampled range are clamped
    /// to the end values.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len() - 1;
        if n == 0 || x <= 0.0 {
            return self.values[0];
        }
        let pos = x / self.step;
        if pos >= n as f64 {
            return self.values[n];
        }
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        if frac == 0.0 {
            return self.values[i];
        }
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }

    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self::new(self.step, values)
    }

    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

/// Extends samples of `q` on `[0, L]` to `[0, horizon]`, first evenly about
/// `x = L` and then periodically, so that `q(2nL ± x) = q(x)`.
///
/// The result has the same step as the input and is exact at every node.
pub fn extend_potential_folded(q_edge: &SampledFn, horizon: f64) -> Result<SampledFn> {
    let n = q_edge.len() - 1;
    if n == 0 {
        return Err(Error::ShapeMismatch("potential needs at least two samples".into()));
    }
    if horizon < q_edge.length() * (1.0 - 1e-12) {
        return Err(Error::ShapeMismatch(format!(
            "horizon {horizon} shorter than edge length {}",
            q_edge.length()
        )));
    }
    let m = (horizon / q_edge.step - 1e-9).ceil() as usize;
    let period = 2 * n;
    let values = (0..=m)
        .map(|i| {
            let k = i % period;
            let k = if k > n { period - k } else { k };
            q_edge.values[k]
        })
        .collect();
    Ok(SampledFn::new(q_edge.step, values))
}

/// Closed-form description of a potential, kept for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    Zero,
    Constant { value: f64 },
    Table,
}

/// Real potential `q` given edge by edge.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub q1: SampledFn,
    pub q2: SampledFn,
    pub q3: SampledFn,
}

/// Sampling density used for closed-form potentials.
const POTENTIAL_SAMPLES_PER_UNIT: f64 = 2000.0;

fn sample_count(length: f64) -> usize {
    ((length * POTENTIAL_SAMPLES_PER_UNIT).ceil() as usize).max(2)
}

impl PotentialSpec {
    pub fn zero(geom: &LassoGeometry) -> Self {
        Self {
            kind: PotentialKind::Zero,
            q1: SampledFn::zeros(geom.l(), 2),
            q2: SampledFn::zeros(geom.a(), 2),
            q3: SampledFn::zeros(geom.a(), 2),
        }
    }

    pub fn constant(geom: &LassoGeometry, value: f64) -> Self {
        let c = |len: f64| SampledFn::new(len / 2.0, vec![value; 3]);
        Self {
            kind: PotentialKind::Constant { value },
            q1: c(geom.l()),
            q2: c(geom.a()),
            q3: c(geom.a()),
        }
    }

    /// Samples edge-wise closures finely enough for second-order accuracy.
    pub fn from_fns(
        geom: &LassoGeometry,
        q1: impl Fn(f64) -> f64,
        q2: impl Fn(f64) -> f64,
        q3: impl Fn(f64) -> f64,
    ) -> Self {
        Self {
            kind: PotentialKind::Table,
            q1: SampledFn::from_fn(geom.l(), sample_count(geom.l()), q1),
            q2: SampledFn::from_fn(geom.a(), sample_count(geom.a()), q2),
            q3: SampledFn::from_fn(geom.a(), sample_count(geom.a()), q3),
        }
    }

    pub fn from_tables(q1: SampledFn, q2: SampledFn, q3: SampledFn) -> Result<Self> {
        for q in [&q1, &q2, &q3] {
            if q.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("potential samples"));
            }
        }
        Ok(Self {
            kind: PotentialKind::Table,
            q1,
            q2,
            q3,
        })
    }

    pub fn edge(&self, edge: Edge) -> &SampledFn {
        match edge {
            Edge::E1 => &self.q1,
            Edge::E2 => &self.q2,
            Edge::E3 => &self.q3,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, PotentialKind::Zero)
            || (self.q1.is_all_zero() && self.q2.is_all_zero() && self.q3.is_all_zero())
    }

    /// True when the two ring edges carry the same potential, i.e. the graph
    /// is symmetric under exchanging `e2` and `e3`.
    pub fn ring_symmetric(&self) -> bool {
        self.q2 == self.q3
    }

    /// Potential along the whole ring `(0, 2a)` starting at the interior
    /// vertex: `q2` on `(0, a)` followed by `q3` traversed backwards.
    pub fn ring(&self, geom: &LassoGeometry) -> SampledFn {
        let n = sample_count(2.0 * geom.a());
        let a = geom.a();
        SampledFn::from_fn(2.0 * a, n, |y| {
            if y <= a {
                self.q2.eval(y)
            } else {
                self.q3.eval(2.0 * a - y)
            }
        })
    }
}

/// A function sampled on every edge of a [`LassoGrid`]. Index 0 of every edge
/// is the interior vertex; the last index of `e2`/`e3` is the ring midpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFunction {
    pub h: f64,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub e3: Vec<f64>,
}

impl GraphFunction {
    pub fn zeros(grid: &LassoGrid) -> Self {
        Self {
            h: grid.h,
            e1: vec![0.0; grid.n1 + 1],
            e2: vec![0.0; grid.n2 + 1],
            e3: vec![0.0; grid.n2 + 1],
        }
    }

    pub fn from_fns(
        grid: &LassoGrid,
        f1: impl Fn(f64) -> f64,
        f2: impl Fn(f64) -> f64,
        f3: impl Fn(f64) -> f64,
    ) -> Self {
        let h = grid.h;
        Self {
            h,
            e1: (0..=grid.n1).map(|i| f1(i as f64 * h)).collect(),
            e2: (0..=grid.n2).map(|i| f2(i as f64 * h)).collect(),
            e3: (0..=grid.n2).map(|i| f3(i as f64 * h)).collect(),
        }
    }

    pub fn edge(&self, edge: Edge) -> &[f64] {
        match edge {
            Edge::E1 => &self.e1,
            Edge::E2 => &self.e2,
            Edge::E3 => &self.e3,
        }
    }

    pub fn edge_mut(&mut self, edge: Edge) -> &mut Vec<f64> {
        match edge {
            Edge::E1 => &mut self.e1,
            Edge::E2 => &mut self.e2,
            Edge::E3 => &mut self.e3,
        }
    }

    pub fn edge_fn(&self, edge: Edge) -> SampledFn {
        SampledFn::new(self.h, self.edge(edge).to_vec())
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            h: self.h,
            e1: self.e1.iter().map(|v| f(*v)).collect(),
            e2: self.e2.iter().map(|v| f(*v)).collect(),
            e3: self.e3.iter().map(|v| f(*v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.e1.len() != other.e1.len() || self.e2.len() != other.e2.len() {
            return Err(Error::ShapeMismatch("graph functions on different grids".into()));
        }
        let z = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect();
        Ok(Self {
            h: self.h,
            e1: z(&self.e1, &other.e1),
            e2: z(&self.e2, &other.e2),
            e3: z(&self.e3, &other.e3),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x - y)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x + y)
    }

    /// Largest mismatch among the continuity conditions at the interior
    /// vertex and the ring midpoint.
    pub fn vertex_mismatch(&self) -> f64 {
        let n = self.e2.len() - 1;
        let v = self.e1[0];
        (v - self.e2[0])
            .abs()
            .max((v - self.e3[0]).abs())
            .max((self.e2[n] - self.e3[n]).abs())
    }

    pub fn max_abs(&self) -> f64 {
        self.e1
            .iter()
            .chain(&self.e2)
            .chain(&self.e3)
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Graph `L²` inner product by the composite trapezoid rule.
    pub fn inner(&self, other: &Self) -> f64 {
        Edge::ALL
            .iter()
            .map(|e| {
                let p: Vec<f64> = self
                    .edge(*e)
                    .iter()
                    .zip(other.edge(*e))
                    .map(|(x, y)| x * y)
                    .collect();
                trapezoid(&p, self.h)
            })
            .sum()
    }
}

/// Composite trapezoid rule for uniform samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Running trapezoid integral, starting from 0.
pub fn cumulative_trapezoid(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * h * (values[i - 1] + v);
        }
        out.push(acc);
    }
    out
}

/// Derivative samples: centered differences inside, first-order one-sided
/// differences at the two ends.
pub fn derivative_centered(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            if i == 0 {
                (values[1] - values[0]) / h
            } else if i == n - 1 {
                (values[n - 1] - values[n - 2]) / h
            } else {
                (values[i + 1] - values[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// Derivative samples with second-order one-sided stencils at the ends.
pub fn derivative_second_order(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    if n < 3 {
        return derivative_centered(values, h);
    }
    (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h)
            } else {
                (values[i + 1] - values[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// `‖u‖` in `L²(Ω)`.
pub fn norm_h(state: &GraphFunction) -> f64 {
    state.inner(state).sqrt()
}

/// `‖u‖` in `H¹(Ω)`: `‖u'‖² + ‖u‖²` summed over the edges.
pub fn norm_h1(state: &GraphFunction) -> f64 {
    let grad: f64 = Edge::ALL
        .iter()
        .map(|e| {
            let d = derivative_centered(state.edge(*e), state.h);
            let d2: Vec<f64> = d.iter().map(|v| v * v).collect();
            trapezoid(&d2, state.h)
        })
        .sum();
    (grad + state.inner(state)).sqrt()
}

/// Function-space tag of a target component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceTag {
    /// Continuous at the interior vertex and closed around the ring.
    H10,
    /// Plain `L²`.
    H,
    /// Edgewise `H¹`, no vertex condition.
    H1,
    /// `φ1(0) = φr(2a)` only. Carried for bookkeeping; nothing enforces it.
    H11,
}

/// Shape/velocity target pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetState {
    pub phi1: GraphFunction,
    pub phi2: GraphFunction,
    pub space_tag: SpaceTag,
}

impl TargetState {
    /// Validates the vertex conditions required by `space_tag` for `phi1`.
    pub fn new(phi1: GraphFunction, phi2: GraphFunction, space_tag: SpaceTag) -> Result<Self> {
        if phi1.e1.len() != phi2.e1.len() || phi1.e2.len() != phi2.e2.len() {
            return Err(Error::ShapeMismatch("phi1 and phi2 on different grids".into()));
        }
        let all_finite = [&phi1, &phi2]
            .iter()
            .all(|f| f.e1.iter().chain(&f.e2).chain(&f.e3).all(|v| v.is_finite()));
        if !all_finite {
            return Err(Error::NonFinite("target samples"));
        }
        if space_tag == SpaceTag::H10 {
            check_h10(&phi1)?;
        }
        Ok(Self {
            phi1,
            phi2,
            space_tag,
        })
    }

    pub fn zero(grid: &LassoGrid) -> Self {
        Self {
            phi1: GraphFunction::zeros(grid),
            phi2: GraphFunction::zeros(grid),
            space_tag: SpaceTag::H10,
        }
    }
}

/// Rejects functions whose vertex mismatch exceeds `1e-9 · ‖φ‖_{H¹}`.
pub fn check_h10(phi: &GraphFunction) -> Result<()> {
    let mismatch = phi.vertex_mismatch();
    if mismatch > 1e-9 * norm_h1(phi) {
        return Err(Error::TargetNotH10 { mismatch });
    }
    Ok(())
}
