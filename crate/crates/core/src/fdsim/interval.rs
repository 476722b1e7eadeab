//! Leapfrog simulator on a single interval, used as an oracle for the
//! half-line and interval representations.

use crate::error::{Error, Result};
use crate::graph::{steps_in, SampledFn};

/// Boundary condition at one end of the interval. The closure gives the
/// boundary value (Dirichlet) or `u_x` (Neumann) as a function of time.
pub enum Bc1d<'a> {
    Dirichlet(&'a dyn Fn(f64) -> f64),
    Neumann(&'a dyn Fn(f64) -> f64),
}

/// Simulates `u_tt - u_xx + q u = 0` on `(0, length)` from rest up to
/// `t_end` and returns `u` at each probe `(x, t)`, interpolated linearly
/// in space and time.
pub fn simulate_interval(
    q: &SampledFn,
    length: f64,
    left: Bc1d,
    right: Bc1d,
    t_end: f64,
    h: f64,
    cfl: f64,
    probes: &[(f64, f64)],
) -> Result<Vec<f64>> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::CflViolation(cfl));
    }
    let n = steps_in(length, h)?;
    let dt = cfl * h;
    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    let lam2 = cfl * cfl;
    let qv: Vec<f64> = (0..=n).map(|i| q.eval(i as f64 * h)).collect();

    let mut out = vec![f64::NAN; probes.len()];
    let sample = |u: &[f64], x: f64| -> f64 {
        let p = (x / h).clamp(0.0, n as f64);
        let i = (p.floor() as usize).min(n.saturating_sub(1));
        let f = p - i as f64;
        u[i] + f * (u[i + 1] - u[i])
    };

    let mut prev = vec![0.0; n + 1];
    let mut cur = vec![0.0; n + 1];
    let mut next = vec![0.0; n + 1];
    for (k, (x, t)) in probes.iter().enumerate() {
        if *t <= 0.0 {
            out[k] = sample(&cur, *x);
        }
    }

    let ghost_left = |u: &[f64], t: f64| match &left {
        Bc1d::Neumann(g) => Some(u[1] - 2.0 * h * g(t)),
        Bc1d::Dirichlet(_) => None,
    };
    let ghost_right = |u: &[f64], t: f64| match &right {
        Bc1d::Neumann(g) => Some(u[n - 1] + 2.0 * h * g(t)),
        Bc1d::Dirichlet(_) => None,
    };

    for step in 0..steps {
        let t = step as f64 * dt;
        let t_new = t + dt;
        // first step: Taylor expansion from rest, u^1 = u^0 + dt^2/2 L u^0
        let (a, b) = if step == 0 { (1.0, 0.5) } else { (2.0, 1.0) };
        let gl = ghost_left(&cur, t);
        let gr = ghost_right(&cur, t);
        for i in 0..=n {
            let um = if i == 0 {
                match gl {
                    Some(g) => g,
                    None => continue,
                }
            } else {
                cur[i - 1]
            };
            let up = if i == n {
                match gr {
                    Some(g) => g,
                    None => continue,
                }
            } else {
                cur[i + 1]
            };
            let lap = lam2 * (up - 2.0 * cur[i] + um) - dt * dt * qv[i] * cur[i];
            next[i] = a * cur[i] - (a - 1.0) * prev[i] + b * lap;
        }
        if let Bc1d::Dirichlet(g) = &left {
            next[0] = g(t_new);
        }
        if let Bc1d::Dirichlet(g) = &right {
            next[n] = g(t_new);
        }
        for (k, (x, tp)) in probes.iter().enumerate() {
            if *tp > t && *tp <= t_new + 1e-12 {
                let theta = ((tp - t) / dt).clamp(0.0, 1.0);
                out[k] = (1.0 - theta) * sample(&cur, *x) + theta * sample(&next, *x);
            }
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        if cur.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("interval simulation"));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_dirichlet_pulse_is_translated() {
        let g = |t: f64| if t > 0.0 { (t * t * (1.0 - t).max(0.0)).powi(2) } else { 0.0 };
        let zero = |_: f64| 0.0;
        let q = SampledFn::zeros(4.0, 4);
        let probes = [(0.5, 1.2), (1.0, 1.5), (0.25, 0.2)];
        let u = simulate_interval(&q, 4.0, Bc1d::Dirichlet(&g), Bc1d::Dirichlet(&zero), 1.5, 0.01, 1.0, &probes).unwrap();
        for ((x, t), v) in probes.iter().zip(&u) {
            assert!((v - g(t - x)).abs() < 1e-12, "{x} {t} {v}");
        }
    }

    #[test]
    fn neumann_data_second_order() {
        // u_x(0,t) = g(t) on the half line, q = 0: u = -G(t - x), G' = g
        let g = |t: f64| if t > 0.0 { t * t * (-t).exp() } else { 0.0 };
        let big_g = |t: f64| if t > 0.0 { 2.0 - (t * t + 2.0 * t + 2.0) * (-t).exp() } else { 0.0 };
        let zero = |_: f64| 0.0;
        let q = SampledFn::zeros(3.0, 4);
        let errs: Vec<f64> = [0.02, 0.01, 0.005]
            .iter()
            .map(|h| {
                let u = simulate_interval(&q, 3.0, Bc1d::Neumann(&g), Bc1d::Dirichlet(&zero), 2.0, *h, 0.5, &[(0.5, 2.0)]).unwrap();
                (u[0] + big_g(1.5)).abs()
            })
            .collect();
        assert!(errs[2] < 1e-4);
        assert!(errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0, "{errs:?}");
    }

    #[test]
    fn rejects_bad_cfl() {
        let z = |_: f64| 0.0;
        let q = SampledFn::zeros(1.0, 4);
        assert!(matches!(
            simulate_interval(&q, 1.0, Bc1d::Dirichlet(&z), Bc1d::Dirichlet(&z), 1.0, 0.1, 1.5, &[]),
            Err(Error::CflViolation(_))
        ));
    }
}
