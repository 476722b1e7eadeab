//! Real roots of a smooth scalar function by sign-change scanning, with a
//! local search for root pairs that fall between two samples.

const BISECTION_TOL: f64 = 1e-12;
const GOLDEN_ITERS: usize = 80;

/// Bisection on a bracket with `f(lo)` and `f(hi)` of opposite signs.
pub(crate) fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Minimizer of `g` on `[lo, hi]` by golden-section search.
fn golden_min(g: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..GOLDEN_ITERS {
        if g1 < g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - r * (hi - lo);
            g1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + r * (hi - lo);
            g2 = g(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Roots of `f` in `(lo, hi]`, sorted. A double root (a touching zero with
/// `|f| < double_tol` at the extremum) is reported twice.
pub(crate) fn find_roots(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, step: f64, double_tol: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let xs: Vec<f64> = (0..=n).map(|i| (lo + i as f64 * step).min(hi)).collect();
    let fs: Vec<f64> = xs.iter().map(|x| f(*x)).collect();
    let mut roots = Vec::new();
    for i in 1..=n {
        let (f0, f1) = (fs[i - 1], fs[i]);
        if f1 == 0.0 {
            roots.push(xs[i]);
        } else if f0 != 0.0 && (f0 < 0.0) != (f1 < 0.0) {
            roots.push(bisect(f, xs[i - 1], xs[i]));
        }
        if i < n && f1 != 0.0 {
            let f2 = fs[i + 1];
            let same = (f0 < 0.0) == (f1 < 0.0) && (f1 < 0.0) == (f2 < 0.0) && f0 != 0.0 && f2 != 0.0;
            if same && f1.abs() <= f0.abs() && f1.abs() <= f2.abs() {
                let s = f1.signum();
                let x = golden_min(&|x| s * f(x), xs[i - 1], xs[i + 1]);
                let fx = f(x);
                if s * fx < 0.0 {
                    roots.push(bisect(f, xs[i - 1], x));
                    roots.push(bisect(f, x, xs[i + 1]));
                } else if fx.abs() < double_tol {
                    roots.push(x);
                    roots.push(x);
                }
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}
