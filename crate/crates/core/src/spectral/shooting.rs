//! Eigenpairs for a general potential by shooting: RK4 on each edge and a
//! determinant of the vertex conditions.

use crate::error::{Error, Result};
use crate::graph::{LassoGeometry, PotentialSpec, SampledFn};

use super::roots::find_roots;
use super::{scan_step, EigenPair, EigenTrace, Family, Profile, SIGN_TOL};

/// Largest `ω h` per RK4 step.
const PHASE_PER_STEP: f64 = 0.004;
const MIN_STEPS_PER_UNIT: f64 = 400.0;

/// `y'' = (q - ω²) y` from `x0` to `x1` (either direction), starting at
/// `(y, y')`. Returns the end state and `y` at every step, in the order
/// of integration.
fn integrate(q: &SampledFn, x0: f64, x1: f64, start: [f64; 2], omega2: f64, steps: usize) -> ([f64; 2], Vec<f64>) {
    let h = (x1 - x0) / steps as f64;
    let rhs = |x: f64, s: [f64; 2]| [s[1], (q.eval(x) - omega2) * s[0]];
    let mut s = start;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(s[0]);
    for i in 0..steps {
        let x = x0 + i as f64 * h;
        let k1 = rhs(x, s);
        let k2 = rhs(x + 0.5 * h, [s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1]]);
        let k3 = rhs(x + 0.5 * h, [s[0] + 0.5 * h * k2[0], s[1] + 0.5 * h * k2[1]]);
        let k4 = rhs(x + h, [s[0] + h * k3[0], s[1] + h * k3[1]]);
        for c in 0..2 {
            s[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        out.push(s[0]);
    }
    (s, out)
}

fn steps_for(len: f64, omega: f64) -> usize {
    let n = (len * MIN_STEPS_PER_UNIT).max(len * omega / PHASE_PER_STEP).ceil() as usize;
    n + n % 2
}

/// Edge solutions at one frequency, all oriented away from the vertex.
struct Shot {
    /// `e1` from `(1, 0)` at `l`; samples ascending from the vertex.
    y1: [f64; 2],
    y1s: Vec<f64>,
}

fn shoot_e1(q: &PotentialSpec, geom: &LassoGeometry, omega: f64) -> Shot {
    let l = geom.l();
    let (end, mut samples) = integrate(&q.q1, l, 0.0, [1.0, 0.0], omega * omega, steps_for(l, omega));
    samples.reverse();
    Shot { y1: end, y1s: samples }
}

/// `e2` from `(1, 0)` at the midpoint, samples ascending from the vertex.
fn shoot_half_ring(q: &SampledFn, a: f64, omega: f64) -> ([f64; 2], Vec<f64>) {
    let (end, mut samples) = integrate(q, a, 0.0, [1.0, 0.0], omega * omega, steps_for(a, omega));
    samples.reverse();
    (end, samples)
}

/// Secular function of the modes even under exchanging the ring edges.
fn det_symmetric(q: &PotentialSpec, geom: &LassoGeometry, omega: f64) -> f64 {
    let s = shoot_e1(q, geom, omega);
    let (z, _) = shoot_half_ring(&q.q2, geom.a(), omega);
    2.0 * s.y1[0] * z[1] + z[0] * s.y1[1]
}

/// `W(a)` for `W(0) = 0, W'(0) = 1` on `e2`: zero at the odd modes.
fn det_antisymmetric(q: &PotentialSpec, geom: &LassoGeometry, omega: f64) -> f64 {
    let a = geom.a();
    integrate(&q.q2, 0.0, a, [0.0, 1.0], omega * omega, steps_for(a, omega)).0[0]
}

/// Ring basis `C` (`C(0) = 1, C'(0) = 0`) and `S` (`S(0) = 0, S'(0) = 1`) on `(0, 2a)`.
struct RingBasis {
    c: [f64; 2],
    s: [f64; 2],
    cs: Vec<f64>,
    ss: Vec<f64>,
}

fn ring_basis(ring: &SampledFn, a: f64, omega: f64) -> RingBasis {
    let n = 2 * steps_for(a, omega);
    let (c, cs) = integrate(ring, 0.0, 2.0 * a, [1.0, 0.0], omega * omega, n);
    let (s, ss) = integrate(ring, 0.0, 2.0 * a, [0.0, 1.0], omega * omega, n);
    RingBasis { c, s, cs, ss }
}

/// Vertex system in the unknowns `(c1, v, d)`: ring closes at `v`, flux
/// balance, `e1` meets the vertex value.
fn vertex_matrix(y1: [f64; 2], b: &RingBasis) -> [[f64; 3]; 3] {
    [
        [0.0, b.c[0] - 1.0, b.s[0]],
        [y1[1], -b.c[1], 1.0 - b.s[1]],
        [y1[0], -1.0, 0.0],
    ]
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn det_general(q: &PotentialSpec, geom: &LassoGeometry, ring: &SampledFn, omega: f64) -> f64 {
    let s = shoot_e1(q, geom, omega);
    det3(&vertex_matrix(s.y1, &ring_basis(ring, geom.a(), omega)))
}

fn simpson_samples(v: &[f64], h: f64) -> f64 {
    let n = v.len() - 1;
    debug_assert!(n % 2 == 0);
    let inner: f64 = (1..n).map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * v[i]).sum();
    h / 3.0 * (v[0] + inner + v[n])
}

fn sq(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x * x).collect()
}

fn sampled(len: f64, values: Vec<f64>) -> SampledFn {
    let n = values.len() - 1;
    SampledFn::new(len / n as f64, values)
}

/// Applies the sign convention and assembles the pair.
fn finish(omega: f64, family: Family, edges: [SampledFn; 3], trace: EigenTrace, residual: f64) -> EigenPair {
    let lead = if trace.phi_l.abs() > SIGN_TOL { trace.phi_l } else { trace.dphi[1] };
    let sign = if lead < 0.0 { -1.0 } else { 1.0 };
    let edges = edges.map(|e| SampledFn::new(e.step, e.values.iter().map(|v| sign * v).collect()));
    let norm2: f64 = edges.iter().map(|e| simpson_samples(&sq(&e.values), e.step)).sum();
    EigenPair {
        omega,
        multiplicity: 1,
        family,
        trace: EigenTrace {
            phi_l: sign * trace.phi_l,
            dphi: trace.dphi.map(|d| sign * d),
        },
        norm_check: (norm2.sqrt() - 1.0).abs(),
        vertex_residual: residual,
        profile: Profile::Sampled { edges },
    }
}

fn build_symmetric(q: &PotentialSpec, geom: &LassoGeometry, omega: f64, family: Family) -> EigenPair {
    let (l, a) = (geom.l(), geom.a());
    let s = shoot_e1(q, geom, omega);
    let (z, zs) = shoot_half_ring(&q.q2, a, omega);
    let v1 = (z[0], s.y1[0]);
    let v2 = (2.0 * z[1], -s.y1[1]);
    let (c1, k) = if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) { v1 } else { v2 };
    let n1 = simpson_samples(&sq(&s.y1s), l / (s.y1s.len() - 1) as f64);
    let n2 = simpson_samples(&sq(&zs), a / (zs.len() - 1) as f64);
    let scale = 1.0 / (c1 * c1 * n1 + 2.0 * k * k * n2).sqrt();
    let (c1, k) = (c1 * scale, k * scale);
    let residual = (c1 * s.y1[0] - k * z[0]).abs().max((c1 * s.y1[1] + 2.0 * k * z[1]).abs());
    let e1 = sampled(l, s.y1s.iter().map(|v| c1 * v).collect());
    let e2 = sampled(a, zs.iter().map(|v| k * v).collect());
    let trace = EigenTrace {
        phi_l: c1,
        dphi: [c1 * s.y1[1], k * z[1], k * z[1]],
    };
    finish(omega, family, [e1, e2.clone(), e2], trace, residual)
}

fn build_antisymmetric(q: &PotentialSpec, geom: &LassoGeometry, omega: f64) -> EigenPair {
    let (l, a) = (geom.l(), geom.a());
    let (w, ws) = integrate(&q.q2, 0.0, a, [0.0, 1.0], omega * omega, steps_for(a, omega));
    let s = 1.0 / (2.0 * simpson_samples(&sq(&ws), a / (ws.len() - 1) as f64)).sqrt();
    let e2 = sampled(a, ws.iter().map(|v| s * v).collect());
    let e3 = sampled(a, ws.iter().map(|v| -s * v).collect());
    let trace = EigenTrace {
        phi_l: 0.0,
        dphi: [0.0, s, -s],
    };
    finish(omega, Family::RingAntisym, [SampledFn::zeros(l, 2), e2, e3], trace, 2.0 * s * w[0].abs())
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn build_general(q: &PotentialSpec, geom: &LassoGeometry, ring: &SampledFn, omega: f64, family: Family) -> EigenPair {
    let (l, a) = (geom.l(), geom.a());
    let s = shoot_e1(q, geom, omega);
    let b = ring_basis(ring, a, omega);
    let m = vertex_matrix(s.y1, &b);
    let norm = |v: &[f64; 3]| v.iter().map(|x| x * x).sum::<f64>();
    let x = [cross(&m[0], &m[1]), cross(&m[0], &m[2]), cross(&m[1], &m[2])]
        .into_iter()
        .max_by(|u, v| norm(u).total_cmp(&norm(v)))
        .expect("three candidates");
    let ring_vals: Vec<f64> = b.cs.iter().zip(&b.ss).map(|(c, sv)| x[1] * c + x[2] * sv).collect();
    let hr = 2.0 * a / (ring_vals.len() - 1) as f64;
    let n1 = simpson_samples(&sq(&s.y1s), l / (s.y1s.len() - 1) as f64);
    let scale = 1.0 / (x[0] * x[0] * n1 + simpson_samples(&sq(&ring_vals), hr)).sqrt();
    let x = x.map(|v| v * scale);
    let residual = m.iter().map(|r| (r[0] * x[0] + r[1] * x[1] + r[2] * x[2]).abs()).fold(0.0, f64::max);
    let half = (ring_vals.len() - 1) / 2;
    let e1 = sampled(l, s.y1s.iter().map(|v| x[0] * v).collect());
    let e2 = sampled(a, ring_vals[..=half].iter().map(|v| scale * v).collect());
    let e3 = sampled(a, ring_vals[half..].iter().rev().map(|v| scale * v).collect());
    let trace = EigenTrace {
        phi_l: x[0],
        dphi: [x[0] * s.y1[1], x[2], -(x[1] * b.c[1] + x[2] * b.s[1])],
    };
    finish(omega, family, [e1, e2, e3], trace, residual)
}

/// The lowest `n_max` eigenpairs for the potential `q`, assuming `ω² ≥ 0`.
/// When both ring edges carry the same potential the modes even and odd
/// under exchanging them are found separately, so double frequencies are
/// resolved.
pub fn spectrum_shooting(q: &PotentialSpec, geom: &LassoGeometry, n_max: usize) -> Result<Vec<EigenPair>> {
    if n_max == 0 {
        return Ok(Vec::new());
    }
    let (l, a) = (geom.l(), geom.a());
    let step = scan_step(geom);
    let qmax = [&q.q1, &q.q2, &q.q3]
        .iter()
        .flat_map(|f| f.values.iter())
        .fold(0.0_f64, |m, v| m.max(*v));
    let mut hi = (n_max as f64 + 2.0) * std::f64::consts::PI / (l + 2.0 * a) + qmax.sqrt() + 1.0;
    let symmetric = q.ring_symmetric();
    let ring = q.ring(geom);
    let lowest = if q.is_zero() { Family::Constant } else { Family::Generic };
    loop {
        let mut out = Vec::new();
        if symmetric {
            let ds = |w: f64| det_symmetric(q, geom, w);
            if ds(0.0).abs() < 1e-12 {
                out.push(build_symmetric(q, geom, 0.0, lowest));
            }
            let even = find_roots(&ds, 0.0, hi, step, 0.0);
            let odd = find_roots(&|w| det_antisymmetric(q, geom, w), 0.0, hi, step, 0.0);
            for w in &even {
                let mut p = build_symmetric(q, geom, *w, Family::Generic);
                if odd.iter().any(|o| (o - w).abs() < 1e-9) {
                    p.multiplicity = 2;
                }
                out.push(p);
            }
            for w in &odd {
                let mut p = build_antisymmetric(q, geom, *w);
                if even.iter().any(|e| (e - w).abs() < 1e-9) {
                    p.multiplicity = 2;
                }
                out.push(p);
            }
        } else {
            let dg = |w: f64| det_general(q, geom, &ring, w);
            if dg(0.0).abs() < 1e-12 {
                out.push(build_general(q, geom, &ring, 0.0, lowest));
            }
            let roots = find_roots(&dg, 0.0, hi, step, 1e-13);
            for (i, w) in roots.iter().enumerate() {
                let mut p = build_general(q, geom, &ring, *w, Family::Generic);
                let twin = |j: usize| roots.get(j).is_some_and(|r| (r - w).abs() < 1e-9);
                if twin(i + 1) || (i > 0 && twin(i - 1)) {
                    p.multiplicity = 2;
                }
                out.push(p);
            }
        }
        if out.len() >= n_max {
            out.sort_by(|x, y| x.omega.total_cmp(&y.omega));
            out.truncate(n_max);
            return Ok(out);
        }
        if !hi.is_finite() || hi > 1e7 {
            return Err(Error::ScanTooCoarse(hi));
        }
        hi *= 1.5;
    }
}
