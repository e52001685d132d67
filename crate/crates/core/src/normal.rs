//! Standard normal CDF, its logarithm, and a few log-space helpers.
//!
//! The CDF is W. J. Cody's rational Chebyshev approximation (the same
//! one R's `pnorm` uses) with the exp(-x^2/2) factor split in two so the
//! tail keeps full relative precision.

use std::f64::consts::LN_2;

use statrs::distribution::{ContinuousCDF, Normal};

const A: [f64; 5] = [
    2.2352520354606839287,
    161.02823106855587881,
    1067.6894854603709582,
    18154.981253343561249,
    0.065682337918207449113,
];
const B: [f64; 4] = [
    47.20258190468824187,
    976.09855173777669322,
    10260.932208618978205,
    45507.789335026729956,
];
const C: [f64; 9] = [
    0.39894151208813466764,
    8.8831497943883759412,
    93.506656132177855979,
    597.27027639480026226,
    2494.5375852903726711,
    6848.1904505362823326,
    11602.651437647350124,
    9842.7148383839780218,
    1.0765576773720192317e-8,
];
const D: [f64; 8] = [
    22.266688044328115691,
    235.38790178262499861,
    1519.377599407554805,
    6485.558298266760755,
    18615.571640885098091,
    34900.952721145977266,
    38912.003286093271411,
    19685.429676859990727,
];
const P: [f64; 6] = [
    0.21589853405795699,
    0.1274011611602473639,
    0.022235277870649807,
    0.001421619193227893466,
    2.9112874951168792e-5,
    0.02307344176494017303,
];
const Q: [f64; 5] = [
    1.28426009614491121,
    0.468238212480865118,
    0.0659881378689285515,
    0.00378239633202758244,
    7.29751555083966205e-5,
];

const M_SQRT_32: f64 = 5.656854249492380195206754896838;
const M_1_SQRT_2PI: f64 = 0.398942280401432677939946059934;
const LN_SQRT_2PI: f64 = 0.918938533204672741780329736406;

enum Core {
    /// |x| small: Φ(x) = 0.5 + t.
    Center(f64),
    /// Φ(−|x|) = exp(−ysq²/2)·exp(−del/2)·temp.
    Tail { ysq: f64, del: f64, temp: f64 },
    /// |x| so large that even the log of the tail overflows.
    Beyond,
}

impl Core {
    fn log_tail(&self) -> f64 {
        match *self {
            Core::Tail { ysq, del, temp } => -ysq * ysq * 0.5 - del * 0.5 + temp.ln(),
            _ => f64::NEG_INFINITY,
        }
    }

    fn tail(&self) -> f64 {
        match *self {
            Core::Tail { ysq, del, temp } => (-ysq * ysq * 0.5).exp() * (-del * 0.5).exp() * temp,
            _ => 0.0,
        }
    }
}

fn core(x: f64) -> Core {
    let y = x.abs();
    if y <= 0.67448975 {
        let (xnum, xden) = if y > f64::EPSILON * 0.5 {
            let xsq = x * x;
            let mut xnum = A[4] * xsq;
            let mut xden = xsq;
            for i in 0..3 {
                xnum = (xnum + A[i]) * xsq;
                xden = (xden + B[i]) * xsq;
            }
            (xnum, xden)
        } else {
            (0.0, 0.0)
        };
        return Core::Center(x * (xnum + A[3]) / (xden + B[3]));
    }
    let temp = if y <= M_SQRT_32 {
        let mut xnum = C[8] * y;
        let mut xden = y;
        for i in 0..7 {
            xnum = (xnum + C[i]) * y;
            xden = (xden + D[i]) * y;
        }
        (xnum + C[7]) / (xden + D[7])
    } else {
        if y >= 1e170 {
            return Core::Beyond;
        }
        let xsq = 1.0 / (x * x);
        let mut xnum = P[5] * xsq;
        let mut xden = xsq;
        for i in 0..4 {
            xnum = (xnum + P[i]) * xsq;
            xden = (xden + Q[i]) * xsq;
        }
        let t = xsq * (xnum + P[4]) / (xden + Q[4]);
        (M_1_SQRT_2PI - t) / y
    };
    // exp(-y^2/2) = exp(-ysq^2/2) * exp(-del/2) with ysq exact in 1/16ths
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    Core::Tail { ysq, del, temp }
}

/// Φ(x).
pub fn cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    match core(x) {
        Core::Center(t) => 0.5 + t,
        c => {
            if x > 0.0 {
                1.0 - c.tail()
            } else {
                c.tail()
            }
        }
    }
}

/// Φ(−x), the upper tail.
pub fn sf(x: f64) -> f64 {
    cdf(-x)
}

/// ln Φ(x), accurate in both tails.
pub fn log_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    match core(x) {
        Core::Center(t) => (0.5 + t).ln(),
        c => {
            if x > 0.0 {
                (-c.tail()).ln_1p()
            } else {
                c.log_tail()
            }
        }
    }
}

/// ln Φ(−x).
pub fn log_sf(x: f64) -> f64 {
    log_cdf(-x)
}

/// ln R(y) for the Mills ratio R(y) = Φ(−y)/φ(y), y ≥ 0.
///
/// In the tail regions Cody's approximation already factors out
/// exp(−y²/2), so R comes out without forming the two tiny numbers.
pub fn log_mills(y: f64) -> f64 {
    debug_assert!(y >= 0.0);
    match core(y) {
        Core::Tail { temp, .. } => temp.ln() + LN_SQRT_2PI,
        Core::Beyond => -y.ln(),
        Core::Center(t) => (0.5 - t).ln() - log_pdf(y),
    }
}

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    // same split as the CDF keeps the relative error small for large |x|
    let y = x.abs();
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    M_1_SQRT_2PI * (-ysq * ysq * 0.5).exp() * (-del * 0.5).exp()
}

/// ln φ(x).
pub fn log_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Quantile Φ⁻¹(p).
pub fn quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// ln(1 − exp(x)) for x ≤ 0 without cancellation.
pub fn log1mexp(x: f64) -> f64 {
    if x > -LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// ln(exp(a) + exp(b)).
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + (-(a - b).abs()).exp().ln_1p()
}

/// 1/√(2π).
pub const INV_SQRT_2PI: f64 = M_1_SQRT_2PI;


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_values() {
        assert_eq!(cdf(0.0), 0.5);
        assert!((cdf(1.0) - 0.8413447460685429).abs() < 1e-16);
        assert!((cdf(-1.959963984540054) - 0.025).abs() < 1e-16);
    }

    #[test]
    fn log_cdf_far_tail() {
        // ln Φ(−40) = −804.6084420137538...
        let v = log_cdf(-40.0);
        assert!(((v + 804.6084420137538) / 804.6084420137538).abs() < 1e-14, "{v}");
    }

    #[test]
    fn log1mexp_both_branches() {
        let x = -1e-20;
        assert!((log1mexp(x) - (1e-20f64).ln()).abs() < 1e-12);
        let x = -50.0;
        assert!((log1mexp(x) + (-50.0f64).exp()).abs() < 1e-30);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-10, 0.025, 0.3, 0.5, 0.975] {
            let x = quantile(p);
            assert!((cdf(x) - p).abs() < 1e-14 * p.max(1e-3), "{p}");
        }
    }
}
