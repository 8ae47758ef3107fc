//! Bracketing root finders and a unimodal maximiser.

use crate::error::{Error, Result};

/// Bisection on `[lo, hi]` for a continuous `f` with a sign change.
///
/// Stops when the bracket width drops below `rel_tol * max(|lo|, |hi|)` or
/// the midpoint is no longer representable between the endpoints.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::Bracket { lo, hi });
    }
    let a_negative = fa < 0.0;
    for _ in 0..400 {
        let mid = 0.5 * (a + b);
        if mid <= a.min(b) || mid >= a.max(b) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == a_negative {
            a = mid;
        } else {
            b = mid;
        }
        if (b - a).abs() <= rel_tol * a.abs().max(b.abs()) {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// Newton's method kept inside the bracket `[lo, hi]`; `f` returns the value
/// and the derivative. A step that leaves the bracket or fails to halve the
/// previous step is replaced by bisection. Same stopping rule as [`bisect`].
pub fn newton_bracketed<F: FnMut(f64) -> (f64, f64)>(mut f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<f64> {
    let (fa, _) = f(lo);
    let (fb, _) = f(hi);
    if fa == 0.0 {
        return Ok(lo);
    }
    if fb == 0.0 {
        return Ok(hi);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::Bracket { lo, hi });
    }
    // Orient so that f(neg) < 0 < f(pos).
    let (mut neg, mut pos) = if fa < 0.0 { (lo, hi) } else { (hi, lo) };
    let mut x = 0.5 * (lo + hi);
    let mut last_step = (hi - lo).abs();
    for _ in 0..400 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.is_nan() {
            return Err(Error::Bracket { lo, hi });
        }
        if fx < 0.0 {
            neg = x;
        } else {
            pos = x;
        }
        let (a, b) = (neg.min(pos), neg.max(pos));
        let newton = x - fx / dfx;
        let next = if newton > a && newton < b && (newton - x).abs() < 0.5 * last_step {
            newton
        } else {
            0.5 * (a + b)
        };
        let step = (next - x).abs();
        let tol = rel_tol * a.abs().max(b.abs());
        if step <= tol || b - a <= tol || next <= a || next >= b {
            return Ok(next.clamp(a, b));
        }
        last_step = step;
        x = next;
    }
    Ok(x)
}

/// Golden-section search for the maximiser of a unimodal function on
/// `[lo, hi]`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, rel_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if (b - a).abs() <= rel_tol * (a.abs() + b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if fc > fd {
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
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
