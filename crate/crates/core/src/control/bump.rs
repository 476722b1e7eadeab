//! Short hat-shaped controls calibrated to hit a prescribed value at the far
//! end of an interval.

use crate::error::{Error, Result};
use crate::graph::SampledFn;
use crate::kernels::{solve_goursat_folded, KernelBc};
use crate::wave_rep::{eval_interval_folded, ControlTrace, RightBc};

/// Amplitudes below this are treated as degenerate.
const MIN_AMPLITUDE: f64 = 1e-8;
const MAX_HALVINGS: usize = 5;

/// `L_ε(t - center)` with `L_ε(t) = ε^{-1/3} - ε^{-4/3}|t|` on `|t| ≤ ε`.
pub fn hat(eps: f64, center: f64, t: f64) -> f64 {
    let d = (t - center).abs();
    if d >= eps {
        0.0
    } else {
        eps.powf(-1.0 / 3.0) - eps.powf(-4.0 / 3.0) * d
    }
}

/// Pulse with the support and peak of [`hat`] that is flat on the middle
/// half of its support and has three continuous derivatives.
pub(crate) fn plateau_pulse(eps: f64, center: f64, t: f64) -> f64 {
    let r = (t - center).abs() / eps;
    let peak = eps.powf(-1.0 / 3.0);
    if r >= 1.0 {
        0.0
    } else if r <= 0.5 {
        peak
    } else {
        let x = 2.0 * (1.0 - r);
        peak * x.powi(4) * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x.powi(3))
    }
}

/// Value at `(x, x + ε)` of the solution on `(0, length)` driven from
/// `x = 0` by `pulse(t - ε)`, for a pulse supported in `[-ε, ε]`.
pub(crate) fn pulse_response(
    q_edge: &SampledFn,
    length: f64,
    right: RightBc,
    x: f64,
    eps: f64,
    h: f64,
    pulse: &dyn Fn(f64) -> f64,
) -> Result<f64> {
    let t_end = x + eps;
    let n = (t_end / h).round() as usize;
    let horizon = n as f64 * h;
    let k = solve_goursat_folded(q_edge, KernelBc::Dirichlet, horizon, h)?;
    let trace = ControlTrace::from_fn(horizon, n, |t| pulse(t - eps));
    eval_interval_folded(&k, &trace, right, length, x, horizon)
}

fn hat_response(q_edge: &SampledFn, length: f64, right: RightBc, eps: f64, h: f64) -> Result<f64> {
    pulse_response(q_edge, length, right, length, eps, h, &|t| hat(eps, 0.0, t))
}

/// Hat control on `[0, l + ε]` producing `u(l, l + ε) = target_value` for
/// the interval with `u_x(l, t) = 0`. Returns the control and the `ε`
/// actually used, which is halved while the response is degenerate.
pub fn bump_control(target_value: f64, eps: f64, l: f64, q: &SampledFn, h: f64) -> Result<(ControlTrace, f64)> {
    let mut eps = eps;
    for _ in 0..=MAX_HALVINGS {
        let alpha = hat_response(q, l, RightBc::Neumann, eps, h)?;
        if alpha.abs() >= MIN_AMPLITUDE {
            let n = ((l + eps) / h).round() as usize;
            let scale = target_value / alpha;
            let trace = ControlTrace::from_fn(n as f64 * h, n, |t| scale * hat(eps, eps, t));
            return Ok((trace, eps));
        }
        eps *= 0.5;
    }
    Err(Error::DegenerateAmplitude(eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_target_gives_zero_trace() {
        let q = SampledFn::zeros(1.0, 10);
        let (c, _) = bump_control(0.0, 0.1, 1.0, &q, 0.01).unwrap();
        assert!(c.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn free_amplitude_is_twice_the_peak() {
        let q = SampledFn::zeros(1.0, 10);
        let alpha = hat_response(&q, 1.0, RightBc::Neumann, 0.1, 0.01).unwrap();
        assert_relative_eq!(alpha, 2.0 * 0.1f64.powf(-1.0 / 3.0), epsilon = 1e-12);
        let (c, _) = bump_control(3.0, 0.1, 1.0, &q, 0.01).unwrap();
        let peak = c.values.iter().fold(0.0_f64, |m, v| m.max(*v));
        assert_relative_eq!(peak, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn plateau_shape() {
        let eps: f64 = 0.4;
        let peak = eps.powf(-1.0 / 3.0);
        assert_eq!(plateau_pulse(eps, 1.0, 1.15), peak);
        assert_eq!(plateau_pulse(eps, 1.0, 1.45), 0.0);
        assert_relative_eq!(plateau_pulse(eps, 1.0, 1.3), 0.5 * peak, epsilon = 1e-12);
        let d = 1e-6;
        for t in [0.6 + d, 0.8 - d, 1.2 + d, 1.4 - d] {
            assert!((plateau_pulse(eps, 1.0, t + d) - plateau_pulse(eps, 1.0, t - d)).abs() < 1e-9);
        }
    }

    #[test]
    fn hat_shape() {
        assert_relative_eq!(hat(0.125, 0.0, 0.0), 2.0, epsilon = 1e-12);
        assert_relative_eq!(hat(0.125, 1.0, 1.0625), 1.0, epsilon = 1e-12);
        assert_eq!(hat(0.125, 1.0, 1.2), 0.0);
    }
}
