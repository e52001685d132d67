//! MPFR reference values for the extinction probability and friends.
//!
//! Everything here runs at `PREC` bits and only converts to `f64` at the
//! very end, so it can be used as ground truth for the double precision
//! code in `wzrisk`.

use rug::float::Constant;

use rug::Float;

// gmp-mpfr-sys is only listed to switch on the system libraries.
use gmp_mpfr_sys as _;

/// Working precision in bits.
pub const PREC: u32 = 256;

fn f(x: f64) -> Float {
    Float::with_val(PREC, x)
}

/// Upper tail Φ(−x) = erfc(x/√2)/2.
pub fn norm_sf(x: &Float) -> Float {
    let s = Float::with_val(PREC, 2).sqrt();
    let arg = Float::with_val(PREC, x / &s);
    arg.erfc() / 2
}

/// Φ(x).
pub fn norm_cdf(x: &Float) -> Float {
    let neg = Float::with_val(PREC, -x);
    norm_sf(&neg)
}

/// Standard normal density.
pub fn norm_pdf(x: &Float) -> Float {
    let two_pi: Float = Float::with_val(PREC, Constant::Pi) * 2;
    let e: Float = Float::with_val(PREC, x * x) / -2;
    e.exp() / two_pi.sqrt()
}

/// Reference pair (G, Q) at (w, z); requires w + z > 0.
pub fn g_and_q(w: f64, z: f64) -> (Float, Float) {
    let (w, z) = (f(w), f(z));
    let expo: Float = Float::with_val(PREC, &z + &w) * Float::with_val(PREC, &z - &w) / 2;
    let t = expo.exp() * norm_sf(&z);
    let neg_w = Float::with_val(PREC, -&w);
    let g = norm_sf(&w) + &t;
    let q = norm_sf(&neg_w) - t;
    (g, q)
}

/// G(w, z) as f64 (may underflow to 0).
pub fn g(w: f64, z: f64) -> f64 {
    g_and_q(w, z).0.to_f64()
}

/// ln G(w, z).
pub fn log_g(w: f64, z: f64) -> f64 {
    g_and_q(w, z).0.ln().to_f64()
}

/// ln Q(w, z).
pub fn log_q(w: f64, z: f64) -> f64 {
    g_and_q(w, z).1.ln().to_f64()
}

/// ln Φ(x).
pub fn log_norm_cdf(x: f64) -> f64 {
    if x > 0.0 {
        let t: Float = -norm_sf(&f(x));
        t.ln_1p().to_f64()
    } else {
        norm_cdf(&f(x)).ln().to_f64()
    }
}

/// Φ(x) rounded to f64.
pub fn norm_cdf_f64(x: f64) -> f64 {
    norm_cdf(&f(x)).to_f64()
}

/// Mills ratio Φ(−z)/φ(z).
pub fn mills_ratio(z: f64) -> f64 {
    let z = f(z);
    (norm_sf(&z) / norm_pdf(&z)).to_f64()
}

/// Decimal digits of agreement between `approx` and `exact`, capped at 17.
pub fn digits(approx: f64, exact: &Float) -> f64 {
    if *exact == 0 {
        return if approx == 0.0 { 17.0 } else { 0.0 };
    }
    let err = Float::with_val(PREC, f(approx) - exact).abs() / Float::with_val(PREC, exact.abs_ref());
    if err == 0 {
        17.0
    } else {
        let d = -err.log10().to_f64();
        d.clamp(0.0, 17.0)
    }
}

/// exp((z² − w²)/2), the leading term of G in the far left tail.
pub fn left_tail_lead(w: f64, z: f64) -> Float {
    let (w, z) = (f(w), f(z));
    let expo: Float = Float::with_val(PREC, &z + &w) * Float::with_val(PREC, &z - &w) / 2;
    expo.exp()
}
