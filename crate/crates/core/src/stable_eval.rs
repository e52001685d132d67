//! Stable evaluation of the extinction probability G(w, z) and its
//! complement Q = 1 − G, on the linear and the log scale.
//!
//! G(w, z) = Φ(−w) + exp((z² − w²)/2) Φ(−z), admissible for w + z > 0.
//! For large z the product exp(..)Φ(−z) is replaced by φ(w) S₇(z) where
//! S₇ is the eight-term asymptotic Mills series.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::normal;

/// A point (w, z) with w + z > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskCoordinates {
    w: f64,
    z: f64,
}

impl RiskCoordinates {
    pub fn new(w: f64, z: f64) -> Result<Self> {
        if !w.is_finite() || !z.is_finite() {
            return domain(format!("non-finite coordinates ({w}, {z})"));
        }
        if !(w + z > 0.0) {
            return domain(format!("w + z must be positive, got w = {w}, z = {z}"));
        }
        Ok(RiskCoordinates { w, z })
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn z(&self) -> f64 {
        self.z
    }
}

/// Evaluation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// z at and above which the Mills series replaces exp(..)Φ(−z).
    pub z_thr: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { z_thr: 19.0 }
    }
}

impl EvalConfig {
    pub fn new(z_thr: f64) -> Result<Self> {
        if !(z_thr > 0.0) || !z_thr.is_finite() {
            return domain(format!("z_thr must be positive, got {z_thr}"));
        }
        Ok(EvalConfig { z_thr })
    }
}

/// Which side was computed directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    GDirect,
    QDirect,
}

/// A probability carried as both ln G and ln(1 − G).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualScaleProb {
    pub log_g: f64,
    pub log_q: f64,
    pub branch: Branch,
}

impl DualScaleProb {
    /// Build from ln G, deriving ln Q.
    pub fn from_log_g(log_g: f64) -> Self {
        let log_g = clean(log_g.min(0.0));
        DualScaleProb {
            log_g,
            log_q: clean(normal::log1mexp(log_g)),
            branch: Branch::GDirect,
        }
    }

    /// Build from ln Q, deriving ln G.
    pub fn from_log_q(log_q: f64) -> Self {
        let log_q = clean(log_q.min(0.0));
        DualScaleProb {
            log_g: clean(normal::log1mexp(log_q)),
            log_q,
            branch: Branch::QDirect,
        }
    }

    /// Inverse logit of h.
    pub fn from_logit(h: f64) -> Self {
        // ln G = −ln(1 + e^{−h}), ln Q = −ln(1 + e^{h})
        let log_g = -softplus(-h);
        let log_q = -softplus(h);
        DualScaleProb {
            log_g,
            log_q,
            branch: if h < 0.0 { Branch::GDirect } else { Branch::QDirect },
        }
    }

    /// G = 1 (the boundary w + z → 0⁺).
    pub fn one() -> Self {
        DualScaleProb {
            log_g: 0.0,
            log_q: f64::NEG_INFINITY,
            branch: Branch::QDirect,
        }
    }

    /// G on the linear scale, taken from whichever side is accurate.
    pub fn g(&self) -> f64 {
        match self.branch {
            Branch::GDirect => self.log_g.exp(),
            Branch::QDirect => -self.log_q.exp_m1(),
        }
    }

    /// Q = 1 − G on the linear scale.
    pub fn q(&self) -> f64 {
        match self.branch {
            Branch::GDirect => -self.log_g.exp_m1(),
            Branch::QDirect => self.log_q.exp(),
        }
    }

    /// logit G = ln G − ln Q, monotone in G and accurate at both ends.
    pub fn logit(&self) -> f64 {
        self.log_g - self.log_q
    }

    /// log10 G.
    pub fn log10_g(&self) -> f64 {
        self.log_g / std::f64::consts::LN_10
    }

    /// log10 Q.
    pub fn log10_q(&self) -> f64 {
        self.log_q / std::f64::consts::LN_10
    }

    /// True when the directly computed side carries no information
    /// (it is 0 or −∞ on the log scale).
    pub fn loss_of_information(&self) -> bool {
        let v = match self.branch {
            Branch::GDirect => self.log_g,
            Branch::QDirect => self.log_q,
        };
        v == 0.0 || v == f64::NEG_INFINITY
    }

    /// Total order by G, usable for sorting replicate values.
    pub fn cmp_g(&self, other: &Self) -> std::cmp::Ordering {
        self.logit().total_cmp(&other.logit())
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn clean(x: f64) -> f64 {
    if x.is_nan() {
        f64::NEG_INFINITY
    } else {
        x
    }
}

/// S₇(z) = Σ_{k=0..7} (−1)^k (2k−1)!! / z^{2k+1}.
pub fn mills_s7(z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return domain(format!("Mills series needs z > 0, got {z}"));
    }
    Ok(s7(z))
}

#[inline]
fn s7(z: f64) -> f64 {
    let u = 1.0 / (z * z);
    let p = 1.0
        + u * (-1.0
            + u * (3.0 + u * (-15.0 + u * (105.0 + u * (-945.0 + u * (10395.0 - 135135.0 * u))))));
    p / z
}

/// 1 − z S₇(z), formed without cancellation.
#[inline]
pub(crate) fn one_minus_z_s7(z: f64) -> f64 {
    let u = 1.0 / (z * z);
    u * (1.0 + u * (-3.0 + u * (15.0 + u * (-105.0 + u * (945.0 + u * (-10395.0 + 135135.0 * u))))))
}

/// ln of the second term exp((z²−w²)/2)Φ(−z), switching to φ(w)S₇(z).
#[inline]
pub(crate) fn log_second(w: f64, z: f64, cfg: &EvalConfig) -> f64 {
    if z >= cfg.z_thr {
        normal::log_pdf(w) + s7(z).ln()
    } else {
        (z + w) * (z - w) * 0.5 + normal::log_sf(z)
    }
}

/// ln R(z) with the same switch.
#[inline]
pub(crate) fn log_mills_switched(z: f64, cfg: &EvalConfig) -> f64 {
    if z >= cfg.z_thr {
        s7(z).ln()
    } else {
        normal::log_mills(z)
    }
}

/// exp((z²−w²)/2)Φ(−z) on the linear scale, with the Mills switch.
#[inline]
pub(crate) fn second_term(w: f64, z: f64, cfg: &EvalConfig) -> f64 {
    if z >= cfg.z_thr {
        normal::pdf(w) * s7(z)
    } else {
        ((z + w) * (z - w) * 0.5).exp() * normal::sf(z)
    }
}

/// G on the linear scale. Underflows to 0 deep in the right tail.
pub fn g_linear(c: RiskCoordinates, cfg: &EvalConfig) -> f64 {
    let (w, z) = (c.w, c.z);
    (normal::sf(w) + second_term(w, z, cfg)).min(1.0)
}

/// ln G via log-sum-exp of the two terms.
pub fn log_g(c: RiskCoordinates, cfg: &EvalConfig) -> f64 {
    let (w, z) = (c.w, c.z);
    let a = normal::log_sf(w);
    let b = log_second(w, z, cfg);
    clean(normal::log_add_exp(a, b).min(0.0))
}

/// ln Q = c₀ + ln(1 − exp(b − c₀)) with c₀ = ln Φ(w).
pub fn log_q(c: RiskCoordinates, cfg: &EvalConfig) -> f64 {
    let (w, z) = (c.w, c.z);
    let c0 = normal::log_cdf(w);
    // For w < 0 < z both c₀ and b share the factor φ(w); the difference
    // is then a ratio of Mills ratios and needs no large cancellation.
    let d = if w < 0.0 && z > 0.0 {
        log_mills_switched(z, cfg) - normal::log_mills(-w)
    } else {
        log_second(w, z, cfg) - c0
    };
    if d >= 0.0 {
        return f64::NEG_INFINITY;
    }
    clean(c0 + normal::log1mexp(d))
}

/// Evaluate directly on the well-conditioned side and derive the other.
pub fn eval_hybrid(c: RiskCoordinates, cfg: &EvalConfig) -> DualScaleProb {
    if c.w >= 0.0 {
        DualScaleProb::from_log_g(log_g(c, cfg))
    } else {
        DualScaleProb::from_log_q(log_q(c, cfg))
    }
}

/// Hybrid evaluation at (w, z), saturating at G = 1 when w + z ≤ 0.
pub fn eval_or_one(w: f64, z: f64, cfg: &EvalConfig) -> DualScaleProb {
    match RiskCoordinates::new(w, z) {
        Ok(c) => eval_hybrid(c, cfg),
        Err(_) if w + z <= 0.0 => DualScaleProb::one(),
        Err(_) => DualScaleProb {
            log_g: f64::NAN,
            log_q: f64::NAN,
            branch: Branch::GDirect,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rc(w: f64, z: f64) -> RiskCoordinates {
        RiskCoordinates::new(w, z).unwrap()
    }

    #[test]
    fn rejects_inadmissible() {
        assert!(RiskCoordinates::new(1.0, -1.0).is_err());
        assert!(RiskCoordinates::new(f64::NAN, 1.0).is_err());
        assert!(EvalConfig::new(0.0).is_err());
        assert!(mills_s7(0.0).is_err());
    }

    #[test]
    fn s7_leading_term() {
        let v = mills_s7(1e6).unwrap();
        assert!((v - 1e-6).abs() / 1e-6 < 1e-12);
    }

    #[test]
    fn boundary_limit_is_one() {
        let cfg = EvalConfig::default();
        // 1 − G ≈ φ(0)(w + z) close to the boundary
        let g = g_linear(rc(0.0, 1e-6), &cfg);
        assert!(((1.0 - g) / (normal::INV_SQRT_2PI * 1e-6) - 1.0).abs() < 1e-6);
        assert!((g_linear(rc(0.0, 1e-12), &cfg) - 1.0).abs() < 1e-9);
        assert!(log_g(rc(0.0, 1e-12), &cfg).abs() < 1e-9);
    }

    #[test]
    fn right_tail_table_value() {
        // μ = −0.058925, σ = 0.116939, x_d = 12.64433, t* = 25.5
        let cfg = EvalConfig::default();
        let g = g_linear(rc(18.868, 23.957), &cfg);
        assert!((g.log10() - 1.87e-79f64.log10()).abs() < 0.5, "{g:e}");
        let lg = log_g(rc(18.868, 23.957), &cfg);
        assert!((lg + 181.27).abs() < 1.2, "{lg}");
    }

    #[test]
    fn mills_regime_value() {
        let cfg = EvalConfig::default();
        let g = g_linear(rc(0.0, 20.0), &cfg);
        let expected = 0.5 + normal::INV_SQRT_2PI / 20.0;
        assert!((g - expected).abs() / expected < 1e-4);
    }

    #[test]
    fn sign_rule_picks_branch() {
        let cfg = EvalConfig::default();
        assert_eq!(eval_hybrid(rc(-30.0, 40.0), &cfg).branch, Branch::QDirect);
        assert_eq!(eval_hybrid(rc(30.0, 40.0), &cfg).branch, Branch::GDirect);
    }

    #[test]
    fn complement_near_boundary() {
        let cfg = EvalConfig::default();
        let c = rc(0.0, 0.01);
        let q = log_q(c, &cfg).exp();
        assert!((q - (1.0 - g_linear(c, &cfg))).abs() < 1e-10);
    }

    #[test]
    fn inadmissible_corner_saturates() {
        let cfg = EvalConfig::default();
        let p = eval_or_one(-3.0, 2.0, &cfg);
        assert_eq!(p.log_g, 0.0);
        assert_eq!(p.g(), 1.0);
    }

    #[test]
    fn dual_order_follows_g() {
        let cfg = EvalConfig::default();
        let lo = eval_hybrid(rc(5.0, 6.0), &cfg);
        let hi = eval_hybrid(rc(-5.0, 6.0), &cfg);
        assert_eq!(lo.cmp_g(&hi), std::cmp::Ordering::Less);
    }
}
