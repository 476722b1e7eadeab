//! Eigenfrequencies and eigenfunction traces of the lasso with a Neumann
//! end at `x = l`: the closed form for `q = 0`, shooting for general `q`,
//! gap statistics and the search for root pairs near a lattice.

mod roots;
mod shooting;

pub use shooting::spectrum_shooting;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::graph::{Edge, GraphFunction, LassoGeometry, LassoGrid, SampledFn};
use roots::find_roots;

/// Below this a trace counts as zero for the sign convention.
const SIGN_TOL: f64 = 1e-12;
/// `|sin(ωl)|` below this makes an antisymmetric frequency double.
const DOUBLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Vanishes on `e1`, odd under exchanging the ring edges.
    RingAntisym,
    Generic,
    /// The constant eigenfunction at `ω = 0` (`q = 0` only).
    Constant,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::RingAntisym => "ring_antisym",
            Family::Generic => "generic",
            Family::Constant => "constant",
        }
    }
}

/// `φ(l)` and the derivatives `∂φ_j(0)` along each edge away from the
/// interior vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenTrace {
    pub phi_l: f64,
    pub dphi: [f64; 3],
}

/// Edge profiles of a normalized eigenfunction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    /// `A_j cos(ωx) + B_j sin(ωx)` on edge `j`.
    Trig { omega: f64, coef: [(f64, f64); 3] },
    Sampled { edges: [SampledFn; 3] },
}

impl Profile {
    pub fn value(&self, edge: Edge, x: f64) -> f64 {
        let j = edge.index();
        match self {
            Profile::Trig { omega, coef } => coef[j].0 * (omega * x).cos() + coef[j].1 * (omega * x).sin(),
            Profile::Sampled { edges } => edges[j].eval(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub omega: f64,
    pub multiplicity: u8,
    pub family: Family,
    pub trace: EigenTrace,
    /// `|‖φ‖ - 1|` by independent quadrature.
    pub norm_check: f64,
    /// Largest violation of the vertex and end conditions.
    pub vertex_residual: f64,
    pub profile: Profile,
}

impl EigenPair {
    pub fn value(&self, edge: Edge, x: f64) -> f64 {
        self.profile.value(edge, x)
    }

    /// Samples on the nodes of `grid`.
    pub fn sample(&self, grid: &LassoGrid) -> GraphFunction {
        GraphFunction::from_fns(
            grid,
            |x| self.value(Edge::E1, x),
            |x| self.value(Edge::E2, x),
            |x| self.value(Edge::E3, x),
        )
    }
}

/// Composite Simpson rule with `n` (made even) panels.
pub(crate) fn simpson(f: &dyn Fn(f64) -> f64, length: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = length / n as f64;
    let inner: f64 = (1..n).map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h)).sum();
    h / 3.0 * (f(0.0) + inner + f(length))
}

/// `|‖φ‖ - 1|` for the profile, by quadrature resolving the oscillation.
pub(crate) fn norm_defect(profile: &Profile, geom: &LassoGeometry, omega: f64) -> f64 {
    let sq = |edge: Edge, len: f64| {
        let n = (200.0 * (1.0 + omega * len)).ceil() as usize;
        simpson(&|x| profile.value(edge, x).powi(2), len, n)
    };
    let total = sq(Edge::E1, geom.l()) + sq(Edge::E2, geom.a()) + sq(Edge::E3, geom.a());
    (total.sqrt() - 1.0).abs()
}

/// Characteristic function of the lasso whose loop has length `a`:
/// `2cos(ωl)cos(ωa) - 2cos(ωl) - sin(ωl)sin(ωa)`. Its roots, together with
/// `{2πn/a}` and `ω = 0`, are the frequencies for `q = 0`. For a
/// [`LassoGeometry`] the loop length is `2 * geom.a()`.
pub fn char_q0(omega: f64, a: f64, l: f64) -> f64 {
    let (cl, sl) = ((omega * l).cos(), (omega * l).sin());
    2.0 * cl * (omega * a).cos() - 2.0 * cl - sl * (omega * a).sin()
}

/// Secular function of the eigenfunctions that agree on both ring edges:
/// `2cos(ωl)sin(ωa) + sin(ωl)cos(ωa)`, with `a` the ring edge length.
/// `char_q0(ω, 2a, l) = -2 sin(ωa) S(ω)`.
fn secular_symmetric(omega: f64, geom: &LassoGeometry) -> f64 {
    let (l, a) = (geom.l(), geom.a());
    2.0 * (omega * l).cos() * (omega * a).sin() + (omega * l).sin() * (omega * a).cos()
}

/// Scan step for roots in `ω`.
pub(crate) fn scan_step(geom: &LassoGeometry) -> f64 {
    PI / (16.0 * (geom.l() + 2.0 * geom.a()))
}

/// Values and derivatives at the vertex, the end `l` and the midpoint,
/// checked against continuity, the flux balances and `φ'(l) = 0`.
fn trig_residual(omega: f64, coef: &[(f64, f64); 3], geom: &LassoGeometry) -> f64 {
    let val = |j: usize, x: f64| coef[j].0 * (omega * x).cos() + coef[j].1 * (omega * x).sin();
    let der = |j: usize, x: f64| omega * (-coef[j].0 * (omega * x).sin() + coef[j].1 * (omega * x).cos());
    let (l, a) = (geom.l(), geom.a());
    [
        val(0, 0.0) - val(1, 0.0),
        val(0, 0.0) - val(2, 0.0),
        der(0, 0.0) + der(1, 0.0) + der(2, 0.0),
        der(0, l),
        val(1, a) - val(2, a),
        der(1, a) + der(2, a),
    ]
    .iter()
    .fold(0.0_f64, |m, r| m.max(r.abs()))
}

fn trig_pair(omega: f64, family: Family, coef: [(f64, f64); 3], geom: &LassoGeometry) -> EigenPair {
    let l = geom.l();
    let mut coef = coef;
    let d = |c: &[(f64, f64); 3], j: usize| omega * c[j].1;
    let phi_l = |c: &[(f64, f64); 3]| c[0].0 * (omega * l).cos() + c[0].1 * (omega * l).sin();
    let lead = if phi_l(&coef).abs() > SIGN_TOL { phi_l(&coef) } else { d(&coef, 1) };
    if lead < 0.0 {
        coef = coef.map(|(p, q)| (-p, -q));
    }
    let profile = Profile::Trig { omega, coef };
    EigenPair {
        omega,
        multiplicity: 1,
        family,
        trace: EigenTrace {
            phi_l: phi_l(&coef),
            dphi: [d(&coef, 0), d(&coef, 1), d(&coef, 2)],
        },
        norm_check: norm_defect(&profile, geom, omega),
        vertex_residual: trig_residual(omega, &coef, geom),
        profile,
    }
}

/// Eigenpairs of the `q = 0` lasso with `ω ≤ omega_max`, sorted by
/// frequency. A double frequency appears twice, once per family, with
/// multiplicity 2 on both entries.
pub fn spectrum_q0(geom: &LassoGeometry, omega_max: f64) -> Result<Vec<EigenPair>> {
    if !(omega_max > 0.0 && omega_max.is_finite()) {
        return Err(Error::InvalidGeometry(format!("omega_max must be positive, got {omega_max}")));
    }
    let (l, a) = (geom.l(), geom.a());
    let mut out = Vec::new();

    let c = 1.0 / (l + 2.0 * a).sqrt();
    out.push(trig_pair(0.0, Family::Constant, [(c, 0.0); 3], geom));

    let mut doubles = Vec::new();
    let s = 1.0 / a.sqrt();
    for k in 1.. {
        let omega = k as f64 * PI / a;
        if omega > omega_max {
            break;
        }
        let mut p = trig_pair(omega, Family::RingAntisym, [(0.0, 0.0), (0.0, s), (0.0, -s)], geom);
        if (omega * l).sin().abs() < DOUBLE_TOL {
            p.multiplicity = 2;
            doubles.push(omega);
        }
        out.push(p);
    }

    let step = scan_step(geom);
    let roots = find_roots(&|w| secular_symmetric(w, geom), 0.5 * step, omega_max, step, 0.0);
    if let Some(w) = roots.windows(2).find(|w| w[1] - w[0] < 1e-9) {
        return Err(Error::ScanTooCoarse(w[0]));
    }
    for root in roots {
        // a root on a double frequency is the lattice point itself
        let omega = doubles.iter().copied().find(|d| (d - root).abs() < 1e-9).unwrap_or(root);
        let (sa, ca, sl, cl) = ((omega * a).sin(), (omega * a).cos(), (omega * l).sin(), (omega * l).cos());
        let v1 = (2.0 * sa, -sl);
        let v2 = (ca, cl);
        let (c1, k) = if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) { v1 } else { v2 };
        let norm2 = c1 * c1 * (0.5 * l + (2.0 * omega * l).sin() / (4.0 * omega))
            + 2.0 * k * k * (0.5 * a + (2.0 * omega * a).sin() / (4.0 * omega));
        let (c1, k) = (c1 / norm2.sqrt(), k / norm2.sqrt());
        let mut p = trig_pair(omega, Family::Generic, [(c1 * cl, c1 * sl), (k * ca, k * sa), (k * ca, k * sa)], geom);
        if omega != root {
            p.multiplicity = 2;
        }
        out.push(p);
    }
    out.sort_by(|x, y| x.omega.total_cmp(&y.omega));
    Ok(out)
}

/// Smallest distance between two of the first `n` frequencies; a double
/// frequency gives 0.
pub fn min_gap(spectrum: &[EigenPair], n: usize) -> f64 {
    if spectrum.iter().take(n).any(|p| p.multiplicity == 2) {
        return 0.0;
    }
    let mut w: Vec<f64> = spectrum.iter().take(n).map(|p| p.omega).collect();
    w.sort_by(f64::total_cmp);
    w.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min)
}

/// Continued-fraction convergents `p/n` of `x`, in order.
pub fn convergents(x: f64, count: usize) -> Vec<(u64, u64)> {
    let mut out = Vec::with_capacity(count);
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut r = x;
    for _ in 0..count {
        let t = r.floor();
        let ai = t as u64;
        let (p, q) = (ai * p1 + p0, ai * q1 + q0);
        out.push((p, q));
        (p0, q0, p1, q1) = (p1, q1, p, q);
        let frac = r - t;
        if frac < 1e-12 {
            break;
        }
        r = 1.0 / frac;
    }
    out
}

/// Roots of [`char_q0`] within `1/(L ln n)` of `2πn/L`, where `L` is the
/// longer of the loop length `a` and the pendant length `l`. Returns the two
/// roots and the radius.
pub fn verify_cluster(n: u64, a: f64, l: f64) -> Result<(f64, f64, f64)> {
    let len = a.max(l);
    let center = 2.0 * PI * n as f64 / len;
    let radius = 1.0 / (len * (n as f64).ln());
    let f = |w: f64| char_q0(w, a, l);
    let step = radius / 200.0;
    let roots = find_roots(&f, center - radius, center + radius, step, 1e-13);
    let found: Vec<f64> = roots.into_iter().filter(|r| (r - center).abs() < radius).collect();
    match found.as_slice() {
        [r1, r2] => Ok((*r1, *r2, radius)),
        _ => Err(Error::ClusterNotFound { center, radius, found: found.len() }),
    }
}

/// Smallest `C` with `|φ_n(l)| ≤ C` and `|∂φ_{n,j}(0)| ≤ C n` over the modes
/// with index `n` in `range`, counting from 1 after the lowest mode.
pub fn trace_constant(spectrum: &[EigenPair], range: std::ops::RangeInclusive<usize>) -> f64 {
    range
        .filter_map(|n| spectrum.get(n).map(|p| (n, p)))
        .map(|(n, p)| {
            let d = p.trace.dphi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            p.trace.phi_l.abs().max(d / n as f64)
        })
        .fold(0.0, f64::max)
}
