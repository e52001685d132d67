//! Bracketing root finder: bisection with secant/inverse-quadratic steps
//! (Brent's method), plus geometric bracket expansion.

use crate::error::{Error, Result};

/// Expand outward from `x0` in steps `step, 2 step, 4 step, ...` until
/// `f` changes sign. Returns (a, b, f(a), f(b)) with a < b.
pub fn expand_bracket<F>(
    mut f: F,
    x0: f64,
    step: f64,
    cap: f64,
    what: &'static str,
) -> Result<(f64, f64, f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let f0 = f(x0)?;
    if f0 == 0.0 {
        return Ok((x0, x0, f0, f0));
    }
    // f is taken to be decreasing: a positive value means the root is to the right
    let dir = if f0 > 0.0 { 1.0 } else { -1.0 };
    let (mut prev, mut fprev) = (x0, f0);
    let mut h = step;
    loop {
        let x = x0 + dir * h;
        if x.abs() > cap {
            return Err(Error::Convergence {
                what,
                lo: prev.min(x),
                hi: prev.max(x),
                last: fprev,
            });
        }
        let fx = f(x)?;
        if fx == 0.0 || fx.signum() != fprev.signum() {
            return Ok(if dir > 0.0 {
                (prev, x, fprev, fx)
            } else {
                (x, prev, fx, fprev)
            });
        }
        prev = x;
        fprev = fx;
        h *= 2.0;
    }
}

/// Brent's method on a sign-changing bracket. Stops when the bracket is
/// narrower than `xtol`.
pub fn brent<F>(
    mut f: F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    xtol: f64,
    what: &'static str,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Convergence { what, lo: a, hi: b, last: fb });
    }
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
    }
    Err(Error::Convergence { what, lo: b.min(c), hi: b.max(c), last: fb })
}
