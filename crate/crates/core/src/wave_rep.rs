//! Closed-form solution representations in terms of transformation kernels:
//! the half line with Dirichlet or Neumann data, and the interval `(0, l)`
//! by the method of images.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{cumulative_trapezoid, SampledFn};
use crate::kernels::{Kernel, KernelBc};

/// Slack allowed when comparing evaluation times against a horizon.
const TIME_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regularity {
    L2,
    H1ZeroStart,
    H1ZeroBoth,
}

/// A control sampled uniformly on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlTrace {
    pub step: f64,
    pub values: Vec<f64>,
    pub regularity: Regularity,
    pub cumulative: Option<Vec<f64>>,
}

impl ControlTrace {
    /// Checks the endpoint conditions implied by `regularity`.
    pub fn new(step: f64, values: Vec<f64>, regularity: Regularity) -> Result<Self> {
        if values.is_empty() || !(step > 0.0) {
            return Err(Error::ShapeMismatch("control needs a positive step and samples".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("control samples"));
        }
        let first = values[0];
        let last = *values.last().unwrap();
        let bad = match regularity {
            Regularity::L2 => false,
            Regularity::H1ZeroStart => first != 0.0,
            Regularity::H1ZeroBoth => first != 0.0 || last != 0.0,
        };
        if bad {
            return Err(Error::ShapeMismatch(format!(
                "control endpoints ({first:e}, {last:e}) violate {regularity:?}"
            )));
        }
        Ok(Self {
            step,
            values,
            regularity,
            cumulative: None,
        })
    }

    pub fn l2(step: f64, values: Vec<f64>) -> Self {
        Self {
            step,
            values,
            regularity: Regularity::L2,
            cumulative: None,
        }
    }

    pub fn from_fn(t_end: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let step = t_end / n as f64;
        Self::l2(step, (0..=n).map(|i| f(i as f64 * step)).collect())
    }

    pub fn zeros(t_end: f64, n: usize) -> Self {
        Self::from_fn(t_end, n, |_| 0.0)
    }

    /// Attaches the trapezoid running integral.
    pub fn with_cumulative(mut self) -> Self {
        self.cumulative = Some(cumulative_trapezoid(&self.values, self.step));
        self
    }

    pub fn duration(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    /// Zero for negative times, linear interpolation inside, last value held
    /// beyond the end.
    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        self.as_sampled().eval(t)
    }

    pub fn as_sampled(&self) -> SampledFn {
        SampledFn::new(self.step, self.values.clone())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            step: self.step,
            values: self.values.iter().map(|v| c * v).collect(),
            regularity: self.regularity,
            cumulative: self.cumulative.as_ref().map(|cu| cu.iter().map(|v| c * v).collect()),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        crate::graph::trapezoid(&sq, self.step).sqrt()
    }

    pub fn h1_norm(&self) -> f64 {
        let d = crate::graph::derivative_centered(&self.values, self.step);
        let sq: Vec<f64> = d.iter().map(|v| v * v).collect();
        (crate::graph::trapezoid(&sq, self.step) + self.l2_norm().powi(2)).sqrt()
    }
}

/// Uniform samples of a function of time that vanishes for `t < 0`.
pub(crate) fn causal(f: &SampledFn, t: f64) -> f64 {
    if t < 0.0 {
        0.0
    } else {
        f.eval(t)
    }
}

/// `f(t - z) + ∫_z^t k(z, s) f(t - s) ds`, or 0 when `z > t`.
///
/// The integral uses the trapezoid rule with a step no larger than the
/// sampling step of `f`.
pub fn image_term(kernel: &Kernel, f: &SampledFn, z: f64, t: f64) -> f64 {
    if z > t + TIME_SLACK {
        return 0.0;
    }
    let span = (t - z).max(0.0);
    let mut total = causal(f, t - z);
    if span > 0.0 {
        let n = ((span / f.step) - TIME_SLACK).ceil().max(1.0) as usize;
        let ds = span / n as f64;
        let mut acc = 0.0;
        for m in 0..=n {
            let s = z + m as f64 * ds;
            let w = if m == 0 || m == n { 0.5 } else { 1.0 };
            acc += w * kernel.eval(z, s) * causal(f, t - s);
        }
        total += acc * ds;
    }
    total
}

fn check_horizon(kernel: &Kernel, t: f64) -> Result<()> {
    if t > kernel.horizon + TIME_SLACK {
        return Err(Error::HorizonExceeded {
            t,
            horizon: kernel.horizon,
        });
    }
    Ok(())
}

/// `u(x,t)` on the half line with `u(0,t) = g(t)`.
pub fn eval_halfline_dirichlet(kernel: &Kernel, g: &ControlTrace, x: f64, t: f64) -> Result<f64> {
    check_horizon(kernel, t)?;
    if x >= t {
        return Ok(0.0);
    }
    Ok(image_term(kernel, &g.as_sampled(), x, t))
}

/// `u(x,t)` on the half line with `β1 u(0,t) + β2 u_x(0,t) = g(t)`.
pub fn eval_halfline_neumann(kernel: &Kernel, g: &ControlTrace, beta: (f64, f64), x: f64, t: f64) -> Result<f64> {
    let (beta1, beta2) = beta;
    if beta2 == 0.0 {
        return Err(Error::BadBc);
    }
    check_horizon(kernel, t)?;
    if x >= t {
        return Ok(0.0);
    }
    let f = neumann_potential(g, beta1, beta2);
    Ok(image_term(kernel, &f, x, t))
}

/// `f(t) = -(1/β2) ∫_0^t g(s) exp((β1/β2)(t - s)) ds`.
fn neumann_potential(g: &ControlTrace, beta1: f64, beta2: f64) -> SampledFn {
    let r = beta1 / beta2;
    let step = g.step;
    let mut out = Vec::with_capacity(g.values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..g.values.len() {
        // exact update of the convolution with the exponential, trapezoid on g
        let decay = (r * step).exp();
        acc = acc * decay + 0.5 * step * (g.values[i - 1] * decay + g.values[i]);
        out.push(-acc / beta2);
    }
    SampledFn::new(step, out)
}

/// Condition imposed at the far end `x = l` of the interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RightBc {
    Dirichlet,
    Neumann,
}

/// Image points `z ≤ t` with their signs for `u(0,t) = h(t)` and a
/// homogeneous condition at `l`.
pub fn folded_images(right_bc: RightBc, l: f64, x: f64, t: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut n = 0usize;
    loop {
        let plus = 2.0 * n as f64 * l + x;
        let minus = 2.0 * n as f64 * l - x;
        if minus > t + TIME_SLACK {
            break;
        }
        let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
        if n >= 1 {
            let sign = match right_bc {
                RightBc::Dirichlet => -1.0,
                RightBc::Neumann => -parity,
            };
            out.push((minus, sign));
        }
        if plus <= t + TIME_SLACK {
            let sign = match right_bc {
                RightBc::Dirichlet => 1.0,
                RightBc::Neumann => parity,
            };
            out.push((plus, sign));
        }
        n += 1;
    }
    out
}

/// `u(x,t)` on `(0, l)` with `u(0,t) = h(t)` and either `u(l,t) = 0` or
/// `u_x(l,t) = 0`, summed over image points. The kernel must be the Dirichlet
/// kernel of the evenly-periodically extended potential.
pub fn eval_interval_folded(kernel: &Kernel, h: &ControlTrace, right_bc: RightBc, l: f64, x: f64, t: f64) -> Result<f64> {
    check_horizon(kernel, t)?;
    if kernel.bc != KernelBc::Dirichlet {
        return Err(Error::UnsupportedBc { beta1: 0.0, beta2: 1.0 });
    }
    let hs = h.as_sampled();
    Ok(folded_images(right_bc, l, x, t)
        .into_iter()
        .map(|(z, sign)| sign * image_term(kernel, &hs, z, t))
        .sum())
}

/// Image points for the Neumann control at `l`: `(2m+1)l ∓ x` with signs
/// `±(-1)^m`.
pub fn neumann_control_images(l: f64, x: f64, t: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut m = 0usize;
    loop {
        let c = (2 * m + 1) as f64 * l;
        if c - x > t + TIME_SLACK {
            break;
        }
        let parity = if m % 2 == 0 { 1.0 } else { -1.0 };
        out.push((c - x, parity));
        if c + x <= t + TIME_SLACK {
            out.push((c + x, -parity));
        }
        m += 1;
    }
    out
}

/// `u(x,t)` on `(0, l)` with `u(0,t) = 0` given the running integral `P`
/// of the boundary flux; `u_x(l,t) = P'(t)`.
pub fn eval_neumann_series(w: &Kernel, big_p: &SampledFn, l: f64, x: f64, t: f64) -> f64 {
    neumann_control_images(l, x, t)
        .into_iter()
        .map(|(z, sign)| sign * image_term(w, big_p, z, t))
        .sum()
}

/// `u(x,t)` on `(0, l)` with `u(0,t) = 0` and boundary flux `p` at `l`,
/// with `P = -∫ p`. Here `p` is the derivative taken into the interval,
/// `p(t) = -u_x(l,t)`.
pub fn eval_interval_neumann_control(w: &Kernel, p: &ControlTrace, l: f64, x: f64, t: f64) -> Result<f64> {
    check_horizon(w, t)?;
    if w.bc != KernelBc::Neumann {
        return Err(Error::UnsupportedBc { beta1: 1.0, beta2: 0.0 });
    }
    let big_p: Vec<f64> = cumulative_trapezoid(&p.values, p.step).iter().map(|v| -v).collect();
    Ok(eval_neumann_series(w, &SampledFn::new(p.step, big_p), l, x, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{solve_goursat, solve_goursat_folded, solve_goursat_reflected_neumann};
    use approx::assert_relative_eq;

    fn zero_kernel(bc: KernelBc, horizon: f64) -> Kernel {
        solve_goursat(&SampledFn::zeros(horizon, 10), bc, horizon, 0.01).unwrap()
    }

    #[test]
    fn halfline_dirichlet_free_case() {
        let k = zero_kernel(KernelBc::Dirichlet, 4.0);
        let g = ControlTrace::from_fn(4.0, 400, |t| t * t);
        assert_relative_eq!(eval_halfline_dirichlet(&k, &g, 0.5, 1.5).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(eval_halfline_dirichlet(&k, &g, 2.0, 1.5).unwrap(), 0.0);
        assert!(matches!(
            eval_halfline_dirichlet(&k, &g, 0.0, 5.0),
            Err(Error::HorizonExceeded { .. })
        ));
    }

    #[test]
    fn halfline_neumann_free_case() {
        let k = zero_kernel(KernelBc::Neumann, 4.0);
        let g = ControlTrace::from_fn(4.0, 400, |t| t);
        // -∫_0^{t-x} s ds
        assert_relative_eq!(eval_halfline_neumann(&k, &g, (0.0, 1.0), 0.5, 2.5).unwrap(), -2.0, epsilon = 1e-12);
        let zero = ControlTrace::zeros(4.0, 400);
        assert_eq!(eval_halfline_neumann(&k, &zero, (0.0, 1.0), 0.2, 1.0).unwrap(), 0.0);
        assert!(matches!(eval_halfline_neumann(&k, &g, (1.0, 0.0), 0.2, 1.0), Err(Error::BadBc)));
    }

    #[test]
    fn mixed_potential_is_exponential_convolution() {
        let g = ControlTrace::from_fn(2.0, 2000, |_| 1.0);
        let f = neumann_potential(&g, 1.0, 2.0);
        // -(1/2) ∫_0^t e^{(t-s)/2} ds = 1 - e^{t/2}
        assert_relative_eq!(f.eval(2.0), 1.0 - 1f64.exp(), epsilon = 1e-6);
    }

    #[test]
    fn interval_free_reflections() {
        let k = zero_kernel(KernelBc::Dirichlet, 4.0);
        let hf = |t: f64| if t > 0.0 { t.sin() * t } else { 0.0 };
        let h = ControlTrace::from_fn(4.0, 4000, hf);
        let (x, t) = (0.3, 1.5);
        let d = eval_interval_folded(&k, &h, RightBc::Dirichlet, 1.0, x, t).unwrap();
        assert_relative_eq!(d, hf(t - x) - hf(t - 2.0 + x), epsilon = 1e-6);
        let n = eval_interval_folded(&k, &h, RightBc::Neumann, 1.0, x, t).unwrap();
        assert_relative_eq!(n, hf(t - x) + hf(t - 2.0 + x), epsilon = 1e-6);
    }

    #[test]
    fn neumann_image_signs() {
        // u(x,t) = h(t-x) + h(t-2+x) - h(t-2-x) - h(t-4+x) + ... for l = 1
        let imgs = folded_images(RightBc::Neumann, 1.0, 0.25, 6.0);
        let expect = [(0.25, 1.0), (1.75, 1.0), (2.25, -1.0), (3.75, -1.0), (4.25, 1.0), (5.75, 1.0)];
        assert_eq!(imgs.len(), expect.len());
        for (got, want) in imgs.iter().zip(expect) {
            assert_relative_eq!(got.0, want.0, epsilon = 1e-14);
            assert_eq!(got.1, want.1);
        }
        let imgs = neumann_control_images(1.0, 0.25, 4.0);
        let expect = [(0.75, 1.0), (1.25, -1.0), (2.75, -1.0), (3.25, 1.0)];
        assert_eq!(imgs, expect);
    }

    #[test]
    fn neumann_control_early_times() {
        let w = zero_kernel(KernelBc::Neumann, 4.0);
        let p = ControlTrace::from_fn(4.0, 4000, |_| 1.0);
        assert_eq!(eval_interval_neumann_control(&w, &p, 1.0, 0.5, 0.4).unwrap(), 0.0);
        // P(t - l + x) = -(t - 0.5)
        assert_relative_eq!(eval_interval_neumann_control(&w, &p, 1.0, 0.5, 1.2).unwrap(), -0.7, epsilon = 1e-12);
    }

    #[test]
    fn wrong_kernel_kinds_rejected() {
        let q = SampledFn::new(1.0, vec![1.0; 3]);
        let w = solve_goursat_reflected_neumann(&q, 2.0, 0.05).unwrap();
        let k = solve_goursat_folded(&q, KernelBc::Dirichlet, 2.0, 0.05).unwrap();
        let c = ControlTrace::zeros(2.0, 40);
        assert!(eval_interval_folded(&w, &c, RightBc::Dirichlet, 1.0, 0.5, 1.0).is_err());
        assert!(eval_interval_neumann_control(&k, &c, 1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn endpoint_tags_enforced() {
        assert!(ControlTrace::new(0.1, vec![0.0, 1.0, 0.0], Regularity::H1ZeroBoth).is_ok());
        assert!(ControlTrace::new(0.1, vec![0.0, 1.0, 1.0], Regularity::H1ZeroBoth).is_err());
        assert!(ControlTrace::new(0.1, vec![1.0, 1.0], Regularity::H1ZeroStart).is_err());
        let c = ControlTrace::from_fn(1.0, 10, |t| t).with_cumulative();
        assert_relative_eq!(c.cumulative.unwrap()[10], 0.5, epsilon = 1e-13);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn representations_are_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, x in 0.0f64..1.0, t in 0.0f64..2.0) {
                let q = SampledFn::from_fn(1.0, 100, |x| 1.0 + x);
                let k = solve_goursat_folded(&q, KernelBc::Dirichlet, 2.0, 0.05).unwrap();
                let w = solve_goursat_reflected_neumann(&q, 2.0, 0.05).unwrap();
                let g1 = ControlTrace::from_fn(2.0, 40, |t| t.sin());
                let g2 = ControlTrace::from_fn(2.0, 40, |t| t * t);
                let comb = ControlTrace::l2(g1.step, g1.values.iter().zip(&g2.values).map(|(u, v)| a * u + b * v).collect());
                let evals: [&dyn Fn(&ControlTrace) -> f64; 4] = [
                    &|g| eval_halfline_dirichlet(&k, g, x, t).unwrap(),
                    &|g| eval_interval_folded(&k, g, RightBc::Dirichlet, 1.0, x, t).unwrap(),
                    &|g| eval_interval_folded(&k, g, RightBc::Neumann, 1.0, x, t).unwrap(),
                    &|g| eval_interval_neumann_control(&w, g, 1.0, x, t).unwrap(),
                ];
                for e in evals {
                    let lhs = e(&comb);
                    let rhs = a * e(&g1) + b * e(&g2);
                    prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
                }
            }
        }
    }
}
