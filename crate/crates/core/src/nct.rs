//! Noncentral t distribution: CDF and inversion in the noncentrality.
//!
//! The CDF for t ≥ 0 is the Poisson-mixture series
//!
//!   F(t; ν, δ) = Φ(−δ) + ½ Σ_j [P_j I_y(j+½, ν/2) + (δ/√2) Q_j I_y(j+1, ν/2)],
//!
//! y = t²/(t²+ν), P_j = e^{−λ}λ^j/j!, Q_j = e^{−λ}λ^j/Γ(j+3/2), λ = δ²/2,
//! summed outward from the Poisson mode with the usual incomplete beta
//! recurrences (Benton and Krishnamoorthy, 2003). For t < 0 the
//! reflection F(t; ν, δ) = 1 − F(−t; ν, −δ) is used. For large |δ| the
//! CDF is integrated directly as E[Φ(tV/√ν − δ)] with V ~ χ_ν.

use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};
use crate::normal;
use crate::roots;

/// |δ| above which the integral form is used.
pub const SERIES_MAX_DELTA: f64 = 37.0;

/// Bracket expansion stops when |δ| exceeds this.
pub const DELTA_CAP: f64 = 1e6;

/// Parameters of a noncentral t law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NctParams {
    pub df: f64,
    pub delta: f64,
}

impl NctParams {
    pub fn new(df: u32, delta: f64) -> Result<Self> {
        if df < 1 {
            return domain("noncentral t needs df >= 1");
        }
        if !delta.is_finite() {
            return domain(format!("non-finite noncentrality {delta}"));
        }
        Ok(NctParams { df: df as f64, delta })
    }
}

/// P(T ≤ x) for T ~ t(ν, δ).
pub fn nct_cdf(x: f64, p: NctParams) -> Result<f64> {
    if !x.is_finite() || !p.delta.is_finite() {
        return domain(format!("non-finite argument x = {x}, delta = {}", p.delta));
    }
    if !(p.df >= 1.0) {
        return domain("noncentral t needs df >= 1");
    }
    Ok(cdf_unchecked(x, p.df, p.delta))
}

pub(crate) fn cdf_unchecked(x: f64, nu: f64, delta: f64) -> f64 {
    let v = if delta.abs() > SERIES_MAX_DELTA {
        cdf_integral(x, nu, delta)
    } else if x >= 0.0 {
        cdf_series(x, nu, delta)
    } else {
        1.0 - cdf_series(-x, nu, -delta)
    };
    v.clamp(0.0, 1.0)
}

/// Series form, t ≥ 0.
pub fn cdf_series(t: f64, nu: f64, delta: f64) -> f64 {
    let base = normal::sf(delta);
    if t == 0.0 {
        return base;
    }
    let t2 = t * t;
    let y = t2 / (t2 + nu);
    let omy = nu / (t2 + nu);
    let b = 0.5 * nu;
    let lambda = 0.5 * delta * delta;
    let (ln_y, ln_omy) = (y.ln(), omy.ln());
    let k = lambda.floor();
    let k_ln_lambda = if k > 0.0 { k * lambda.ln() } else { 0.0 };
    let p_k = (-lambda + k_ln_lambda - ln_gamma(k + 1.0)).exp();
    let q_k = (-lambda + k_ln_lambda - ln_gamma(k + 1.5)).exp() * delta / std::f64::consts::SQRT_2;

    let (ap, aq) = (k + 0.5, k + 1.0);
    let ip_k = beta_reg(ap, b, y);
    let iq_k = beta_reg(aq, b, y);
    // g(a) = Γ(a+b)/(Γ(a+1)Γ(b)) y^a (1−y)^b, so that I(a+1) = I(a) − g(a)
    let lg_b = ln_gamma(b);
    let gp_k = (ln_gamma(ap + b) - ln_gamma(ap + 1.0) - lg_b + ap * ln_y + b * ln_omy).exp();
    let gq_k = (ln_gamma(aq + b) - ln_gamma(aq + 1.0) - lg_b + aq * ln_y + b * ln_omy).exp();

    let mut sum = p_k * ip_k + q_k * iq_k;
    let mut mass = p_k;

    // backward from the mode to j = 0
    {
        let (mut p, mut q, mut ip, mut iq) = (p_k, q_k, ip_k, iq_k);
        let (mut gp, mut gq) = (gp_k, gq_k);
        let (mut a_p, mut a_q) = (ap, aq);
        let mut j = k;
        while j >= 1.0 {
            // g(a−1) = g(a) a / (y (a − 1 + b))
            gp *= a_p / (y * (a_p - 1.0 + b));
            gq *= a_q / (y * (a_q - 1.0 + b));
            a_p -= 1.0;
            a_q -= 1.0;
            ip += gp;
            iq += gq;
            p *= j / lambda;
            q *= (j + 0.5) / lambda;
            j -= 1.0;
            let term = p * ip + q * iq;
            sum += term;
            mass += p;
            if p < 1e-18 && q.abs() < 1e-18 {
                break;
            }
            if !gp.is_finite() || !gq.is_finite() {
                break;
            }
        }
    }

    // forward from the mode
    {
        let (mut p, mut q, mut ip, mut iq) = (p_k, q_k, ip_k, iq_k);
        let (mut gp, mut gq) = (gp_k, gq_k);
        let (mut a_p, mut a_q) = (ap, aq);
        let mut j = k;
        let limit = k + 200.0 + 40.0 * lambda.sqrt();
        loop {
            ip -= gp;
            iq -= gq;
            gp *= y * (a_p + b) / (a_p + 1.0);
            gq *= y * (a_q + b) / (a_q + 1.0);
            a_p += 1.0;
            a_q += 1.0;
            j += 1.0;
            p *= lambda / j;
            q *= lambda / (j + 0.5);
            sum += p * ip + q * iq;
            mass += p;
            // the remaining terms are bounded by the remaining Poisson mass
            let bound = (1.0 - mass).max(0.0) * ip.max(0.0) + q.abs() * iq.max(0.0);
            if bound < 1e-16 || j > limit {
                break;
            }
        }
    }
    base + 0.5 * sum
}

/// Integral form E[Φ(tV/√ν − δ)], V ~ χ_ν, valid for any sign of t.
pub fn cdf_integral(t: f64, nu: f64, delta: f64) -> f64 {
    let ln_norm = (0.5 * nu - 1.0) * std::f64::consts::LN_2 + ln_gamma(0.5 * nu);
    let scale = t / nu.sqrt();
    let f = |v: f64| {
        if v <= 0.0 {
            return 0.0;
        }
        let ln_dens = (nu - 1.0) * v.ln() - 0.5 * v * v - ln_norm;
        normal::cdf(scale * v - delta) * ln_dens.exp()
    };
    let mode = (nu - 1.0).max(0.0).sqrt();
    let lo = (mode - 10.0).max(0.0);
    let hi = mode + 10.0;
    let mut cuts = vec![lo, hi];
    // the integrand switches from 0 to the density near v0 = δ√ν/t
    if scale != 0.0 {
        let v0 = delta / scale;
        let width = 1.0 / scale.abs();
        for c in [v0 - 8.0 * width, v0, v0 + 8.0 * width] {
            if c > lo && c < hi {
                cuts.push(c);
            }
        }
    }
    cuts.push(mode);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for pair in cuts.windows(2) {
        if pair[1] > pair[0] {
            total += quadrature::double_exponential::integrate(f, pair[0], pair[1], 1e-15).integral;
        }
    }
    total
}

/// Solve nct_cdf(x_obs; df, δ) = target for δ.
pub fn invert_delta(x_obs: f64, df: u32, target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return domain(format!("target probability must be in (0, 1), got {target}"));
    }
    if !x_obs.is_finite() {
        return domain(format!("non-finite statistic {x_obs}"));
    }
    if df < 1 {
        return domain("noncentral t needs df >= 1");
    }
    let nu = df as f64;
    let f = |d: f64| Ok(cdf_unchecked(x_obs, nu, d) - target);
    // rough spread of T around δ
    let step = (1.0 + x_obs * x_obs / (2.0 * nu)).sqrt();
    let (a, b, fa, fb) = roots::expand_bracket(f, x_obs, step, DELTA_CAP, "noncentral t inversion")?;
    roots::brent(f, a, b, fa, fb, 1e-10, "noncentral t inversion")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cdf(x: f64, df: u32, d: f64) -> f64 {
        nct_cdf(x, NctParams::new(df, d).unwrap()).unwrap()
    }

    #[test]
    fn central_at_zero_is_half() {
        for df in [1, 7, 62] {
            assert_eq!(cdf(0.0, df, 0.0), 0.5);
        }
    }

    #[test]
    fn zero_statistic_reduces_to_normal() {
        let d = normal::quantile(0.975);
        assert!((cdf(0.0, 62, d) - 0.025).abs() < 1e-10);
        // δ rounded to 7 digits is off by 1.5e-8, i.e. 9e-10 in probability
        assert!((cdf(0.0, 62, 1.959964) - 0.025).abs() < 1e-9);
    }

    #[test]
    fn invert_at_zero() {
        let d = invert_delta(0.0, 62, 0.025).unwrap();
        assert!((d - 1.959964).abs() < 1e-6);
        assert!((d - 1.959963984540054).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(invert_delta(1.0, 10, 1.0).is_err());
        assert!(invert_delta(1.0, 10, 0.0).is_err());
        assert!(NctParams::new(0, 1.0).is_err());
        assert!(nct_cdf(f64::NAN, NctParams::new(3, 1.0).unwrap()).is_err());
    }

    #[test]
    fn series_and_integral_agree() {
        for &df in &[1.0, 4.0, 30.0, 62.0, 200.0] {
            for &d in &[-30.0, -8.0, -1.0, 0.0, 0.5, 3.0, 15.0, 36.0] {
                for &x in &[-20.0, -2.0, 0.3, 1.0, 4.0, 18.0, 40.0] {
                    let s = if x >= 0.0 { cdf_series(x, df, d) } else { 1.0 - cdf_series(-x, df, -d) };
                    let i = cdf_integral(x, df, d);
                    assert!((s - i).abs() < 1e-12, "df {df} d {d} x {x}: {s} vs {i}");
                }
            }
        }
    }
}
