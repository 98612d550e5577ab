//! Scalar root finding, 1-D minimization and quadrature used by the
//! distribution and theory modules.

use crate::error::{Error, Result};

/// Bisection for an increasing-or-decreasing continuous `f` on `[lo, hi]`.
///
/// The endpoints must bracket a sign change. Iterates until the bracket is
/// narrower than `x_tol` or `|f| < f_tol`.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64, f_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if !(f_lo.signum() != f_hi.signum()) || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::RootFinding(format!(
            "bracket [{lo}, {hi}] does not straddle a root (f = {f_lo}, {f_hi})"
        )));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid.abs() < f_tol || (hi - lo).abs() < x_tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Finds the boundary of a monotone predicate: the smallest `x` in `[lo, hi]`
/// with `pred(x)` true, assuming `pred(lo)` is false and `pred(hi)` is true.
pub fn bisect_predicate<F>(mut pred: F, mut lo: f64, mut hi: f64, x_tol: f64) -> f64
where
    F: FnMut(f64) -> bool,
{
    while hi - lo > x_tol {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimization of a unimodal `f` on `[a, b]`.
/// Returns `(argmin, min)`.
pub fn golden_min<F>(mut f: F, mut a: f64, mut b: f64, x_tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if (b - a).abs() <= x_tol * (1.0 + c.abs() + d.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximizes a concave `h` on `[0, upper)`, where `upper` may be infinite.
///
/// The bracket is grown from `scale` (geometrically, or towards `upper`)
/// until `h` stops increasing. Returns `(argmax, max)`.
pub fn concave_max<F>(mut h: F, upper: f64, scale: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let next = |s: f64| if upper.is_finite() { 0.5 * (s + upper) } else { 2.0 * s };
    let mut s = if upper.is_finite() { scale.min(0.5 * upper) } else { scale };
    let mut val = finite_or(h(s), f64::NEG_INFINITY);
    let mut hi = s;
    for _ in 0..200 {
        let s2 = next(s);
        let v2 = finite_or(h(s2), f64::NEG_INFINITY);
        hi = s2;
        if !(v2 > val) || s2 == s {
            break;
        }
        s = s2;
        val = v2;
    }
    let (x, neg) = golden_min(|s| -finite_or(h(s), f64::NEG_INFINITY), 0.0, hi, 1e-14);
    let h0 = h(0.0);
    if h0 >= -neg {
        (0.0, h0)
    } else {
        (x, -neg)
    }
}

fn finite_or(x: f64, fallback: f64) -> f64 {
    if x.is_nan() {
        fallback
    } else {
        x
    }
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    // Split into a few panels first so narrow features are not skipped.
    let panels = 16;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == panels { b } else { lo + h };
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            step(&f, lo, hi, fa, fm, fb, whole, tol / panels as f64, 40)
        })
        .sum()
}
