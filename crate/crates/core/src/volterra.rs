//! Volterra integral equations of the second kind,
//! `y(t) + sign · ∫_{t0}^{t} K(t, s) y(s) ds = g(t)`,
//! solved by trapezoid product integration and forward substitution.

use crate::error::{Error, Result};

/// Pivots below this magnitude are treated as singular.
const PIVOT_TOL: f64 = 1e-12;

/// A Volterra equation of the second kind on the uniform grid
/// `t_i = t0 + i·h`, `i = 0..rhs.len()`.
pub struct VeskProblem<'a> {
    pub t0: f64,
    pub h: f64,
    pub kernel: &'a dyn Fn(f64, f64) -> f64,
    pub rhs: Vec<f64>,
    pub sign: f64,
}

impl<'a> VeskProblem<'a> {
    pub fn new(t0: f64, h: f64, kernel: &'a dyn Fn(f64, f64) -> f64, rhs: Vec<f64>, sign: f64) -> Self {
        Self {
            t0,
            h,
            kernel,
            rhs,
            sign,
        }
    }

    fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.h
    }

    fn check(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::ShapeMismatch(format!("step {} must be positive", self.h)));
        }
        if self.rhs.is_empty() {
            return Err(Error::ShapeMismatch("empty right-hand side".into()));
        }
        if self.rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("VESK right-hand side"));
        }
        Ok(())
    }
}

/// Solves the collocation equations
/// `y_i + sign·h·[K_{i0} y_0 / 2 + Σ_{0<j<i} K_{ij} y_j + K_{ii} y_i / 2] = g_i`.
pub fn solve_vesk(p: &VeskProblem) -> Result<Vec<f64>> {
    p.check()?;
    let n = p.rhs.len();
    let mut y = Vec::with_capacity(n);
    y.push(p.rhs[0]);
    for i in 1..n {
        let ti = p.t(i);
        let mut acc = 0.5 * (p.kernel)(ti, p.t0) * y[0];
        for (j, yj) in y.iter().enumerate().skip(1) {
            acc += (p.kernel)(ti, p.t(j)) * yj;
        }
        let pivot = 1.0 + p.sign * 0.5 * p.h * (p.kernel)(ti, ti);
        if !pivot.is_finite() || pivot.abs() < PIVOT_TOL {
            return Err(Error::SingularDiagonal { node: i, pivot });
        }
        let yi = (p.rhs[i] - p.sign * p.h * acc) / pivot;
        if !yi.is_finite() {
            return Err(Error::NonFinite("VESK solution"));
        }
        y.push(yi);
    }
    Ok(y)
}

/// Sup norm of the trapezoid collocation residual, relative to
/// `max(1, ‖g‖∞)`. This is what the solver drives to round-off.
pub fn collocation_residual(p: &VeskProblem, y: &[f64]) -> f64 {
    residual_with(p, y, trapezoid_weights)
}

/// Sup norm of the residual recomputed with Simpson-type quadrature, an
/// independent check of the discretization error.
pub fn vesk_residual(p: &VeskProblem, y: &[f64]) -> f64 {
    residual_with(p, y, simpson_weights)
}

fn residual_with(p: &VeskProblem, y: &[f64], weights: fn(usize) -> Vec<f64>) -> f64 {
    let scale = p.rhs.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0_f64;
    for i in 0..y.len().min(p.rhs.len()) {
        let ti = p.t(i);
        let w = weights(i);
        let integral: f64 = (0..=i).map(|j| w[j] * (p.kernel)(ti, p.t(j)) * y[j]).sum::<f64>() * p.h;
        worst = worst.max((y[i] + p.sign * integral - p.rhs[i]).abs());
    }
    worst / scale
}

/// Trapezoid weights (in units of `h`) for `n` intervals.
pub fn trapezoid_weights(n: usize) -> Vec<f64> {
    let mut w = vec![1.0; n + 1];
    if n == 0 {
        w[0] = 0.0;
        return w;
    }
    w[0] = 0.5;
    w[n] = 0.5;
    w
}

/// Composite Simpson weights (in units of `h`) for `n` intervals, with a
/// closing 3/8 panel when `n` is odd and the trapezoid rule for `n = 1`.
pub fn simpson_weights(n: usize) -> Vec<f64> {
    if n < 2 {
        return trapezoid_weights(n);
    }
    let mut w = vec![0.0; n + 1];
    let simpson_end = if n % 2 == 0 { n } else { n - 3 };
    let mut k = 0;
    while k < simpson_end {
        w[k] += 1.0 / 3.0;
        w[k + 1] += 4.0 / 3.0;
        w[k + 2] += 1.0 / 3.0;
        k += 2;
    }
    if n % 2 == 1 {
        let s = simpson_end;
        w[s] += 3.0 / 8.0;
        w[s + 1] += 9.0 / 8.0;
        w[s + 2] += 9.0 / 8.0;
        w[s + 3] += 3.0 / 8.0;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(len: f64, n: usize) -> (f64, Vec<f64>) {
        let h = len / n as f64;
        (h, (0..=n).map(|i| i as f64 * h).collect())
    }

    #[test]
    fn zero_kernel_returns_rhs() {
        let k = |_: f64, _: f64| 0.0;
        let g: Vec<f64> = (0..11).map(|i| (i as f64).sin()).collect();
        let p = VeskProblem::new(0.0, 0.1, &k, g.clone(), 1.0);
        let y = solve_vesk(&p).unwrap();
        assert_eq!(y, g);
        assert_eq!(vesk_residual(&p, &y), 0.0);
    }

    fn exp_error(n: usize) -> f64 {
        let (h, t) = grid(2.0, n);
        let k = |_: f64, _: f64| 1.0;
        let p = VeskProblem::new(0.0, h, &k, vec![1.0; n + 1], 1.0);
        let y = solve_vesk(&p).unwrap();
        assert!(collocation_residual(&p, &y) < 1e-12);
        y.iter().zip(&t).map(|(y, t)| (y - (-t).exp()).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn exponential_decay_second_order() {
        let e1 = exp_error(100);
        let e2 = exp_error(200);
        let e3 = exp_error(400);
        assert!(e1 < 1e-4);
        for r in [e1 / e2, e2 / e3] {
            assert!((3.0..=5.0).contains(&r), "ratio {r}");
        }
    }

    #[test]
    fn sinh_resolvent() {
        let n = 400;
        let (h, t) = grid(2.0, n);
        let k = |t: f64, s: f64| t - s;
        let p = VeskProblem::new(0.0, h, &k, t.clone(), -1.0);
        let y = solve_vesk(&p).unwrap();
        let err = y.iter().zip(&t).map(|(y, t)| (y - t.sinh()).abs()).fold(0.0, f64::max);
        assert!(err < 1e-4, "err {err}");
    }

    #[test]
    fn residual_examples() {
        let n = 2000;
        let (h, _) = grid(2.0, n);
        let k = |_: f64, _: f64| 1.0;
        let p = VeskProblem::new(0.0, h, &k, vec![1.0; n + 1], 1.0);
        let mut y = solve_vesk(&p).unwrap();
        assert!(vesk_residual(&p, &y) < 1e-5);
        y[n / 2] += 0.1;
        assert!(vesk_residual(&p, &y) >= 0.05);
    }

    #[test]
    fn singular_pivot_detected() {
        let k = |_: f64, _: f64| 20.0;
        let p = VeskProblem::new(0.0, 0.1, &k, vec![1.0; 5], -1.0);
        assert!(matches!(solve_vesk(&p), Err(Error::SingularDiagonal { node: 1, .. })));
    }

    #[test]
    fn simpson_weights_integrate_cubics() {
        for n in 1..9 {
            let h = 1.0 / n as f64;
            let w = simpson_weights(n);
            let q: f64 = w.iter().enumerate().map(|(i, w)| w * (i as f64 * h).powi(if n == 1 { 1 } else { 3 })).sum::<f64>() * h;
            let exact = if n == 1 { 0.5 } else { 0.25 };
            assert!((q - exact).abs() < 1e-14, "n={n} q={q}");
        }
    }

    #[test]
    fn gronwall_bound() {
        let n = 200;
        let (h, _) = grid(5.0, n);
        let k = |t: f64, s: f64| 2.0 * (3.0 * t - s).cos();
        let g: Vec<f64> = (0..=n).map(|i| (i as f64 * h).cos()).collect();
        for sign in [1.0, -1.0] {
            let p = VeskProblem::new(0.0, h, &k, g.clone(), sign);
            let y = solve_vesk(&p).unwrap();
            let sup = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            assert!(sup <= (2.0_f64 * 5.0).exp());
        }
    }
}
