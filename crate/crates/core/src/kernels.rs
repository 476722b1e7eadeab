//! Transformation kernels `k(x, s)` on the triangle `0 ≤ x ≤ s ≤ T`, solving
//!
//! ```text
//! k_ss - k_xx + q(x) k = 0,   k(x, x) = -1/2 ∫_0^x q,
//! ```
//! with either `k(0, s) = 0` (Dirichlet) or `k_x(0, s) = 0` (Neumann).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{extend_potential_folded, steps_in, SampledFn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelBc {
    Dirichlet,
    Neumann,
}

impl KernelBc {
    /// Maps `β1 k(0,s) + β2 k_x(0,s) = 0` to one of the supported cases.
    pub fn from_beta(beta1: f64, beta2: f64) -> Result<Self> {
        if beta2 == 0.0 && beta1 != 0.0 {
            Ok(KernelBc::Dirichlet)
        } else if beta1 == 0.0 && beta2 != 0.0 {
            Ok(KernelBc::Neumann)
        } else {
            Err(Error::UnsupportedBc { beta1, beta2 })
        }
    }

    /// Sign picked up by `k` under `x -> -x`.
    fn reflection_sign(self) -> f64 {
        match self {
            KernelBc::Dirichlet => -1.0,
            KernelBc::Neumann => 1.0,
        }
    }
}

/// Kernel samples `k(x_i, s_j)`, `x_i = i h ≤ s_j = j h ≤ horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub horizon: f64,
    pub h: f64,
    pub n: usize,
    pub bc: KernelBc,
    values: Vec<f64>,
    pub diag_trace: Vec<f64>,
}

fn tri(i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    j * (j + 1) / 2 + i
}

/// Linear interpolation of `q` with even reflection about 0.
fn q_at(q: &SampledFn, x: f64) -> f64 {
    q.eval(x.abs())
}

/// Solves the Goursat problem on a characteristic grid.
///
/// With `ξ = (s+x)/2`, `η = (s-x)/2` the equation becomes
/// `K_ξη = -q(ξ-η) K`. Reflecting `k` oddly (Dirichlet) or evenly (Neumann)
/// across `x = 0` turns the boundary condition into data on `ξ = 0`, and the
/// resulting characteristic problem is marched cell by cell with the
/// trapezoid rule on each cell, which is second order.
pub fn solve_goursat(q_ext: &SampledFn, bc: KernelBc, horizon: f64, h: f64) -> Result<Kernel> {
    if !(horizon > 0.0 && h > 0.0) {
        return Err(Error::ShapeMismatch(format!("horizon {horizon} and step {h} must be positive")));
    }
    if q_ext.length() < horizon * (1.0 - 1e-12) {
        return Err(Error::HorizonExceeded {
            t: horizon,
            horizon: q_ext.length(),
        });
    }
    let n = steps_in(horizon, h)?;
    let m = 2 * n; // ξ + η ≤ horizon in half steps
    let delta = 0.5 * h;
    let q_half: Vec<f64> = (0..=m).map(|k| q_at(q_ext, k as f64 * delta)).collect();
    if q_half.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("potential"));
    }
    let mut diag_half = vec![0.0; m + 1];
    for k in 1..=m {
        diag_half[k] = diag_half[k - 1] - 0.25 * delta * (q_half[k - 1] + q_half[k]);
    }
    let sign = bc.reflection_sign();
    let d4 = 0.25 * delta * delta;
    let q_of = |i: usize, j: usize| q_half[i.abs_diff(j)];

    let mut values = vec![0.0; tri(n, n) + 1];
    let mut prev = diag_half.iter().map(|v| sign * v).collect::<Vec<f64>>(); // row ξ = 0
    let store = |big_i: usize, row: &[f64], values: &mut Vec<f64>| {
        for (big_j, v) in row.iter().enumerate() {
            if big_i >= big_j && (big_i - big_j) % 2 == 0 {
                let i = (big_i - big_j) / 2;
                let j = (big_i + big_j) / 2;
                values[tri(i, j)] = *v;
            }
        }
    };
    store(0, &prev, &mut values);
    for big_i in 1..=m {
        let len = m - big_i + 1;
        let mut row = vec![0.0; len];
        row[0] = diag_half[big_i];
        for big_j in 1..len {
            let k10 = prev[big_j];
            let k01 = row[big_j - 1];
            let k00 = prev[big_j - 1];
            let rhs = k10 + k01 - k00
                - d4 * (q_of(big_i - 1, big_j) * k10 + q_of(big_i, big_j - 1) * k01 + q_of(big_i - 1, big_j - 1) * k00);
            row[big_j] = rhs / (1.0 + d4 * q_of(big_i, big_j));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Goursat kernel"));
        }
        store(big_i, &row, &mut values);
        prev = row;
    }
    let diag_trace = (0..=n).map(|i| diag_half[2 * i]).collect();
    Ok(Kernel {
        horizon,
        h,
        n,
        bc,
        values,
        diag_trace,
    })
}

/// Dirichlet kernel for a potential given on `[0, length]`, extended evenly
/// about `length` and periodically.
pub fn solve_goursat_folded(q_edge: &SampledFn, bc: KernelBc, horizon: f64, h: f64) -> Result<Kernel> {
    let q_ext = extend_potential_folded(q_edge, horizon.max(q_edge.length()))?;
    solve_goursat(&q_ext, bc, horizon, h)
}

/// Neumann kernel `w` of the reversed potential `q̃(x) = q(l - x)`, extended
/// by `q̃(2kl ± x) = q̃(x)`.
pub fn solve_goursat_reflected_neumann(q1: &SampledFn, horizon: f64, h: f64) -> Result<Kernel> {
    solve_goursat_folded(&q1.reversed(), KernelBc::Neumann, horizon, h)
}

impl Kernel {
    /// Node value `k(i h, j h)` for `i ≤ j ≤ n`.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[tri(i, j)]
    }

    /// Node value with the boundary reflection applied for negative `i`.
    fn at_signed(&self, i: isize, j: usize) -> f64 {
        if i < 0 {
            self.bc.reflection_sign() * self.at((-i) as usize, j)
        } else {
            self.at(i as usize, j)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Piecewise-linear interpolation on the triangulated grid, valid for
    /// `0 ≤ x ≤ s ≤ horizon`. Arguments are clamped into that region.
    pub fn eval(&self, x: f64, s: f64) -> f64 {
        let n = self.n as f64;
        let ps = (s / self.h).clamp(0.0, n);
        let px = (x / self.h).clamp(0.0, ps);
        let j0 = (ps.floor() as usize).min(self.n.saturating_sub(1));
        let i0 = (px.floor() as usize).min(j0);
        let fs = ps - j0 as f64;
        let fx = px - i0 as f64;
        if self.n == 0 {
            return self.at(0, 0);
        }
        if i0 < j0 {
            let k00 = self.at(i0, j0);
            let k10 = self.at(i0 + 1, j0);
            let k01 = self.at(i0, j0 + 1);
            let k11 = self.at(i0 + 1, j0 + 1);
            (1.0 - fx) * ((1.0 - fs) * k00 + fs * k01) + fx * ((1.0 - fs) * k10 + fs * k11)
        } else {
            let fx = fx.min(fs);
            let k00 = self.at(i0, j0);
            let k01 = self.at(i0, j0 + 1);
            let k11 = self.at(i0 + 1, j0 + 1);
            k00 + fs * (k01 - k00) + fx * (k11 - k01)
        }
    }

    /// `∂_x k` at the node `(i, j)`: centered differences with the reflected
    /// ghost value at `x = 0`, a second-order backward stencil on the
    /// diagonal.
    pub fn dx_at(&self, i: usize, j: usize) -> f64 {
        let h = self.h;
        if j == 0 {
            if self.n < 2 {
                return 0.0;
            }
            return 2.0 * self.dx_at(0, 1) - self.dx_at(0, 2);
        }
        let ii = i as isize;
        if i < j {
            (self.at_signed(ii + 1, j) - self.at_signed(ii - 1, j)) / (2.0 * h)
        } else {
            (3.0 * self.at_signed(ii, j) - 4.0 * self.at_signed(ii - 1, j) + self.at_signed(ii - 2, j)) / (2.0 * h)
        }
    }

    /// `∂_x k` at an arbitrary point of the triangle, interpolated from
    /// node derivatives.
    pub fn dx_eval(&self, x: f64, s: f64) -> f64 {
        let n = self.n;
        let ps = (s / self.h).clamp(0.0, n as f64);
        let px = (x / self.h).clamp(0.0, ps);
        if n == 0 {
            return 0.0;
        }
        let j0 = (ps.floor() as usize).min(n - 1);
        let i0 = (px.floor() as usize).min(j0);
        let fs = ps - j0 as f64;
        let fx = px - i0 as f64;
        if fs == 0.0 && fx == 0.0 {
            return self.dx_at(i0, j0);
        }
        if i0 < j0 {
            let d00 = self.dx_at(i0, j0);
            let d10 = self.dx_at(i0 + 1, j0);
            let d01 = self.dx_at(i0, j0 + 1);
            let d11 = self.dx_at(i0 + 1, j0 + 1);
            (1.0 - fx) * ((1.0 - fs) * d00 + fs * d01) + fx * ((1.0 - fs) * d10 + fs * d11)
        } else {
            let fx = fx.min(fs);
            let d00 = self.dx_at(i0, j0);
            let d01 = self.dx_at(i0, j0 + 1);
            let d11 = self.dx_at(i0 + 1, j0 + 1);
            d00 + fs * (d01 - d00) + fx * (d11 - d01)
        }
    }

    /// Samples of `r(s) = ∂_x k(0, s)` at `s_j = j h`.
    pub fn normal_derivative_at_zero(&self) -> SampledFn {
        let values = match self.bc {
            KernelBc::Neumann => vec![0.0; self.n + 1],
            KernelBc::Dirichlet => (0..=self.n).map(|j| self.dx_at(0, j)).collect(),
        };
        SampledFn::new(self.h, values)
    }

    /// Discrete residual of `k_ss - k_xx + q k` at interior nodes with
    /// `1 ≤ i` and `i + 1 < j < n`, by centered second differences.
    pub fn pde_residual(&self, q_ext: &SampledFn) -> f64 {
        let h2 = self.h * self.h;
        let mut worst = 0.0_f64;
        for j in 2..self.n {
            for i in 1..j - 1 {
                let kss = self.at(i, j + 1) - 2.0 * self.at(i, j) + self.at(i, j - 1);
                let kxx = self.at(i + 1, j) - 2.0 * self.at(i, j) + self.at(i - 1, j);
                let r = (kss - kxx) / h2 + q_ext.eval(i as f64 * self.h) * self.at(i, j);
                worst = worst.max(r.abs());
            }
        }
        worst
    }

    /// Writes `x,s,k` rows for every stored node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,s,k")?;
        for j in 0..=self.n {
            for i in 0..=j {
                writeln!(out, "{},{},{:e}", i as f64 * self.h, j as f64 * self.h, self.at(i, j))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Successive approximation of the characteristic integral equation
    /// `K(ξ,η) = K(ξ,0) + K(0,η) - K(0,0) - ∫_0^ξ ∫_0^η q K` with the 2-D
    /// trapezoid rule on a square grid of step `d`.
    fn picard_oracle(q: &dyn Fn(f64) -> f64, bc: KernelBc, horizon: f64, d: f64) -> impl Fn(f64, f64) -> f64 {
        let m = (horizon / d).round() as usize;
        let a = |x: f64| {
            // -1/2 ∫_0^x q by fine Simpson
            let k = 200;
            let hh = x / k as f64;
            let s: f64 = (0..=k)
                .map(|i| {
                    let w = if i == 0 || i == k { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                    w * q(i as f64 * hh)
                })
                .sum();
            -0.5 * s * hh / 3.0
        };
        let sign = bc.reflection_sign();
        let data: Vec<Vec<f64>> = (0..=m)
            .map(|i| (0..=m).map(|j| a(i as f64 * d) + sign * a(j as f64 * d)).collect())
            .collect();
        let qg: Vec<Vec<f64>> = (0..=m)
            .map(|i| (0..=m).map(|j| q(((i as f64) - (j as f64)).abs() * d)).collect())
            .collect();
        let mut k = data.clone();
        for _ in 0..60 {
            // cumulative 2-D trapezoid of q K
            let f: Vec<Vec<f64>> = (0..=m).map(|i| (0..=m).map(|j| qg[i][j] * k[i][j]).collect()).collect();
            let mut cum = vec![vec![0.0; m + 1]; m + 1];
            for i in 1..=m {
                for j in 1..=m {
                    cum[i][j] = cum[i - 1][j] + cum[i][j - 1] - cum[i - 1][j - 1]
                        + 0.25 * d * d * (f[i][j] + f[i - 1][j] + f[i][j - 1] + f[i - 1][j - 1]);
                }
            }
            let mut upd = 0.0_f64;
            for i in 0..=m {
                for j in 0..=m {
                    let v = data[i][j] - cum[i][j];
                    upd = upd.max((v - k[i][j]).abs());
                    k[i][j] = v;
                }
            }
            if upd < 1e-13 {
                break;
            }
        }
        move |x: f64, s: f64| {
            let xi = ((s + x) / 2.0 / d).round() as usize;
            let eta = ((s - x) / 2.0 / d).round() as usize;
            k[xi][eta]
        }
    }

    fn bessel_j1_over_z(z2: f64) -> f64 {
        // J1(z)/z as a power series in z² (negative z² gives I1(|z|)/|z|)
        let mut term = 0.5;
        let mut sum = term;
        for k in 1..60 {
            term *= -z2 / (4.0 * k as f64 * (k as f64 + 1.0));
            sum += term;
        }
        sum
    }

    fn constant_kernel(c: f64, x: f64, s: f64) -> f64 {
        -c * x * bessel_j1_over_z(c * (s * s - x * x))
    }

    #[test]
    fn zero_potential_gives_zero_kernel() {
        let q = SampledFn::zeros(3.0, 30);
        for bc in [KernelBc::Dirichlet, KernelBc::Neumann] {
            let k = solve_goursat(&q, bc, 3.0, 0.05).unwrap();
            assert!(k.is_zero());
            assert!(k.normal_derivative_at_zero().is_all_zero());
        }
    }

    #[test]
    fn diagonal_matches_integral() {
        let q = SampledFn::new(1.0, vec![2.5; 4]);
        let k = solve_goursat(&q, KernelBc::Dirichlet, 3.0, 0.01).unwrap();
        for i in 0..=k.n {
            let x = i as f64 * k.h;
            assert_relative_eq!(k.at(i, i), -1.25 * x, epsilon = 1e-12);
            assert_eq!(k.diag_trace[i], k.at(i, i));
            assert_eq!(k.at(0, i), 0.0);
        }
        let minus = solve_goursat(&SampledFn::new(1.0, vec![-2.5; 4]), KernelBc::Dirichlet, 3.0, 0.01).unwrap();
        for i in 0..=k.n {
            assert_eq!(minus.diag_trace[i], -k.diag_trace[i]);
        }
    }

    #[test]
    fn reversed_neumann_diagonal() {
        let q1 = SampledFn::from_fn(1.0, 100, |x| x);
        let w = solve_goursat_reflected_neumann(&q1, 1.0, 0.01).unwrap();
        for i in 0..=w.n {
            let x = i as f64 * 0.01;
            assert_relative_eq!(w.at(i, i), -(x - x * x / 2.0) / 2.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn unsupported_mixed_bc() {
        assert!(matches!(KernelBc::from_beta(0.6, 0.8), Err(Error::UnsupportedBc { .. })));
        assert_eq!(KernelBc::from_beta(1.0, 0.0).unwrap(), KernelBc::Dirichlet);
        assert_eq!(KernelBc::from_beta(0.0, 1.0).unwrap(), KernelBc::Neumann);
    }

    #[test]
    fn constant_potential_matches_bessel_form() {
        for c in [1.0, -1.0, 3.0] {
            let q = SampledFn::new(1.0, vec![c; 3]);
            let k = solve_goursat(&q, KernelBc::Dirichlet, 2.0, 0.01).unwrap();
            let mut worst = 0.0_f64;
            for j in 0..=k.n {
                for i in 0..=j {
                    let (x, s) = (i as f64 * k.h, j as f64 * k.h);
                    worst = worst.max((k.at(i, j) - constant_kernel(c, x, s)).abs());
                }
            }
            assert!(worst < 1e-4, "c={c} err={worst}");
        }
    }

    #[test]
    fn agrees_with_successive_approximation() {
        let qf = |x: f64| 1.0 + 0.5 * (2.0 * x).sin();
        let q = SampledFn::from_fn(2.0, 4000, qf);
        for bc in [KernelBc::Dirichlet, KernelBc::Neumann] {
            let mut errs = vec![];
            for h in [0.04, 0.02] {
                let k = solve_goursat(&q, bc, 2.0, h).unwrap();
                let oracle = picard_oracle(&qf, bc, 2.0, h / 4.0);
                errs.push((k.eval(0.5, 1.0) - oracle(0.5, 1.0)).abs());
            }
            assert!(errs[1] < 2e-4, "{bc:?} {errs:?}");
            assert!(errs[0] / errs[1] > 2.5, "{bc:?} {errs:?}");
        }
    }

    #[test]
    fn normal_derivative_limits() {
        let c = 2.0;
        let q = SampledFn::new(1.0, vec![c; 3]);
        let k = solve_goursat(&q, KernelBc::Dirichlet, 2.0, 0.005).unwrap();
        let r = k.normal_derivative_at_zero();
        assert_relative_eq!(r.values[0], -c / 2.0, epsilon = 1e-3);
        // exact: r(s) = -c J1(z)/z at z = sqrt(c) s
        for j in [50, 200, 400] {
            let s = j as f64 * k.h;
            assert_relative_eq!(r.values[j], -c * bessel_j1_over_z(c * s * s), epsilon = 1e-3);
        }
        let w = solve_goursat(&q, KernelBc::Neumann, 2.0, 0.005).unwrap();
        assert!(w.normal_derivative_at_zero().is_all_zero());
        // the one-sided discrete derivative is also small
        let scale = w.max_abs();
        for j in 2..=w.n {
            let d = (-3.0 * w.at(0, j) + 4.0 * w.at(1, j) - w.at(2, j)) / (2.0 * w.h);
            assert!(d.abs() < 0.05 * scale.max(1.0), "j={j} d={d}");
        }
    }

    #[test]
    fn residual_is_second_order() {
        let qf = |x: f64| (3.0 * x).cos() + x;
        let q = SampledFn::from_fn(2.0, 8000, qf);
        let r: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|h| {
                let k = solve_goursat(&q, KernelBc::Dirichlet, 2.0, *h).unwrap();
                let exact = picard_oracle(&qf, KernelBc::Dirichlet, 2.0, 0.0025);
                let mut worst = 0.0_f64;
                for j in (0..=k.n).step_by((0.2 / h).round() as usize) {
                    for i in (0..=j).step_by((0.2 / h).round() as usize) {
                        worst = worst.max((k.at(i, j) - exact(i as f64 * h, j as f64 * h)).abs());
                    }
                }
                worst
            })
            .collect();
        assert!(r[0] / r[1] > 3.0 && r[1] / r[2] > 2.5, "{r:?}");
        assert!(solve_goursat(&q, KernelBc::Dirichlet, 2.0, 0.02).unwrap().pde_residual(&q) < 0.5);
    }

    #[test]
    fn off_grid_eval_is_linear_exact() {
        let q = SampledFn::new(1.0, vec![1.0; 3]);
        let k = solve_goursat(&q, KernelBc::Dirichlet, 1.0, 0.1).unwrap();
        assert_relative_eq!(k.eval(0.3, 0.7), k.at(3, 7), epsilon = 1e-15);
        let mid = k.eval(0.35, 0.75);
        let lo = k.at(3, 7).min(k.at(4, 8)).min(k.at(3, 8)).min(k.at(4, 7));
        let hi = k.at(3, 7).max(k.at(4, 8)).max(k.at(3, 8)).max(k.at(4, 7));
        assert!(mid >= lo - 1e-15 && mid <= hi + 1e-15);
        // diagonal cell stays on the linear diagonal
        assert_relative_eq!(k.eval(0.55, 0.55), -0.275, epsilon = 1e-12);
    }
}
