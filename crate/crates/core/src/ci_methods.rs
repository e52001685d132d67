//! Point estimate of G and four interval constructions: the w–z method,
//! delta/logit, percentile parametric bootstrap and TMU.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::estimate::{transform_wz, wz_from_params, DriftEstimate, HorizonSpec};
use crate::nct;
use crate::normal;
use crate::stable_eval::{self, eval_hybrid, eval_or_one, DualScaleProb, EvalConfig, RiskCoordinates};

/// Bootstrap replicates when none are given.
pub const DEFAULT_B: usize = 2000;

/// Interval construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Wz,
    DeltaLogit,
    Bootstrap,
    Tmu,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Wz, Method::DeltaLogit, Method::Bootstrap, Method::Tmu];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Wz => "wz",
            Method::DeltaLogit => "delta_logit",
            Method::Bootstrap => "bootstrap",
            Method::Tmu => "tmu",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "wz" | "w_z" => Ok(Method::Wz),
            "delta_logit" | "delta" | "logit" => Ok(Method::DeltaLogit),
            "bootstrap" | "boot" => Ok(Method::Bootstrap),
            "tmu" => Ok(Method::Tmu),
            other => domain(format!("unknown method '{other}'")),
        }
    }
}

/// Point estimate with an equal-tailed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalResult {
    pub point: DualScaleProb,
    pub lower: DualScaleProb,
    pub upper: DualScaleProb,
    pub alpha: f64,
    pub method: Method,
}

impl IntervalResult {
    /// upper − lower on the probability scale, from the accurate side.
    pub fn width(&self) -> f64 {
        prob_diff(&self.upper, &self.lower)
    }

    /// Whether `g` lies inside [lower, upper].
    pub fn contains(&self, g: &DualScaleProb) -> bool {
        self.lower.logit() <= g.logit() && g.logit() <= self.upper.logit()
    }
}

/// b − a on the probability scale, taking differences of Q when both are
/// close to one.
pub fn prob_diff(b: &DualScaleProb, a: &DualScaleProb) -> f64 {
    if b.log_g > -std::f64::consts::LN_2 && a.log_g > -std::f64::consts::LN_2 {
        a.q() - b.q()
    } else {
        b.g() - a.g()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        domain(format!("alpha must be in (0, 1), got {alpha}"))
    }
}

fn check_q(q: usize) -> Result<()> {
    if q > 1 {
        Ok(())
    } else {
        Err(Error::VarianceUnavailable(q))
    }
}

/// Ĝ = G(ŵ, ẑ).
pub fn point_estimate(e: &DriftEstimate, h: &HorizonSpec) -> Result<DualScaleProb> {
    let (w, z) = transform_wz(e, h)?;
    Ok(eval_hybrid(RiskCoordinates::new(w, z)?, &EvalConfig::default()))
}

/// Equal-tailed interval for w (or z) by inverting the noncentral t law of
/// ŵ √((q−1)/q) √(t_q/t*).
pub fn ci_w(w_hat: f64, q: usize, t_q: f64, t_star: f64, alpha: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    check_q(q)?;
    if !(t_q > 0.0 && t_star > 0.0) {
        return domain("t_q and t* must be positive");
    }
    let qf = q as f64;
    let ratio = t_q / t_star;
    let t_obs = w_hat * ((qf - 1.0) / qf).sqrt() * ratio.sqrt();
    let df = (q - 1) as u32;
    let d_lo = nct::invert_delta(t_obs, df, 1.0 - 0.5 * alpha)?;
    let d_hi = nct::invert_delta(t_obs, df, 0.5 * alpha)?;
    let back = ratio.recip().sqrt();
    Ok((d_lo * back, d_hi * back))
}

/// w–z interval at given estimated coordinates.
pub fn ci_wz_coords(
    w_hat: f64,
    z_hat: f64,
    q: usize,
    t_q: f64,
    t_star: f64,
    alpha: f64,
) -> Result<IntervalResult> {
    let cfg = EvalConfig::default();
    let point = eval_hybrid(RiskCoordinates::new(w_hat, z_hat)?, &cfg);
    let (w_lo, w_hi) = ci_w(w_hat, q, t_q, t_star, alpha)?;
    let (z_lo, z_hi) = ci_w(z_hat, q, t_q, t_star, alpha)?;
    // diagonally opposite corners; a corner with w + z <= 0 saturates at 1
    Ok(IntervalResult {
        point,
        lower: eval_or_one(w_hi, z_lo, &cfg),
        upper: eval_or_one(w_lo, z_hi, &cfg),
        alpha,
        method: Method::Wz,
    })
}

/// The w–z interval for G.
pub fn ci_wz(e: &DriftEstimate, h: &HorizonSpec, alpha: f64) -> Result<IntervalResult> {
    check_alpha(alpha)?;
    let (w, z) = transform_wz(e, h)?;
    ci_wz_coords(w, z, e.q, e.t_q, h.t_star, alpha)
}

/// (∂G/∂μ, ∂G/∂σ²) at (μ, σ², x_d, t).
pub fn partials(mu: f64, sigma2: f64, x_d: f64, t: f64) -> (f64, f64) {
    let cfg = EvalConfig::default();
    let (w, z) = wz_from_params(mu, sigma2, x_d, t);
    let second = stable_eval::second_term(w, z, &cfg);
    let sigma = sigma2.sqrt();
    let d_mu = -2.0 * x_d / sigma2 * second;
    let d_s2 = x_d / (sigma * sigma2 * t.sqrt()) * normal::pdf(w) + 2.0 * mu * x_d / (sigma2 * sigma2) * second;
    (d_mu, d_s2)
}

/// Wald interval for logit Ĝ mapped back by the inverse logit.
pub fn ci_delta_logit(e: &DriftEstimate, h: &HorizonSpec, alpha: f64) -> Result<IntervalResult> {
    check_alpha(alpha)?;
    check_q(e.q)?;
    let point = point_estimate(e, h)?;
    if !(point.log_g > f64::NEG_INFINITY && point.log_q > f64::NEG_INFINITY)
        || point.log_g == 0.0
        || point.log_q == 0.0
    {
        return Err(Error::Inapplicable {
            method: "delta_logit",
            reason: "point estimate is numerically 0 or 1".into(),
        });
    }
    let cfg = EvalConfig::default();
    let s2 = e.sigma2()?;
    let (mu, x_d, t) = (e.mu_hat, h.x_d, h.t_star);
    let (w, z) = wz_from_params(mu, s2, x_d, t);
    let sigma = s2.sqrt();
    // dG/dθ / (G(1−G)) assembled in logs so nothing underflows
    let denom = point.log_g + point.log_q;
    let ls = stable_eval::log_second(w, z, &cfg);
    let dh_mu = -(2.0 * x_d / s2) * (ls - denom).exp();
    let dh_s2 = (x_d / (sigma * s2 * t.sqrt())) * (normal::log_pdf(w) - denom).exp()
        + (2.0 * mu * x_d / (s2 * s2)) * (ls - denom).exp();
    let qf = e.q as f64;
    let var_mu = s2 / e.t_q;
    let var_s2 = 2.0 * s2 * s2 * (qf - 1.0) / (qf * qf);
    let var_h = dh_mu * dh_mu * var_mu + dh_s2 * dh_s2 * var_s2;
    if !var_h.is_finite() {
        return Err(Error::Inapplicable {
            method: "delta_logit",
            reason: format!("logit variance is not finite ({var_h})"),
        });
    }
    let half = normal::quantile(1.0 - 0.5 * alpha) * var_h.sqrt();
    let h0 = point.logit();
    Ok(IntervalResult {
        point,
        lower: DualScaleProb::from_logit(h0 - half),
        upper: DualScaleProb::from_logit(h0 + half),
        alpha,
        method: Method::DeltaLogit,
    })
}

/// 1-based rank ⌈p B⌉, robust to p B landing a hair above an integer.
fn ceil_rank(p: f64, b: usize) -> usize {
    let x = p * b as f64;
    let r = x.round();
    let k = if (x - r).abs() <= 1e-9 * x.max(1.0) { r } else { x.ceil() };
    (k as usize).clamp(1, b)
}

/// Percentile parametric bootstrap with a given RNG.
pub fn ci_bootstrap_with(
    e: &DriftEstimate,
    h: &HorizonSpec,
    alpha: f64,
    b: usize,
    rng: &mut ChaCha8Rng,
) -> Result<IntervalResult> {
    check_alpha(alpha)?;
    check_q(e.q)?;
    if b < 100 {
        return domain(format!("bootstrap needs B >= 100, got {b}"));
    }
    let point = point_estimate(e, h)?;
    let cfg = EvalConfig::default();
    let s2 = e.sigma2()?;
    let sd_mu = (s2 / e.t_q).sqrt();
    let chi = ChiSquared::new((e.q - 1) as f64).map_err(|err| Error::Domain(err.to_string()))?;
    let scale = s2 / e.q as f64;
    let mut reps: Vec<DualScaleProb> = Vec::with_capacity(b);
    for _ in 0..b {
        let zn: f64 = StandardNormal.sample(rng);
        let mu_b = e.mu_hat + sd_mu * zn;
        let s2_b = scale * chi.sample(rng);
        let (w, z) = wz_from_params(mu_b, s2_b, h.x_d, h.t_star);
        reps.push(eval_or_one(w, z, &cfg));
    }
    reps.sort_by(|a, b| a.cmp_g(b));
    let lo = ceil_rank(0.5 * alpha, b);
    let hi = ceil_rank(1.0 - 0.5 * alpha, b);
    Ok(IntervalResult {
        point,
        lower: reps[lo - 1],
        upper: reps[hi - 1],
        alpha,
        method: Method::Bootstrap,
    })
}

/// Percentile parametric bootstrap, deterministic in `seed`.
pub fn ci_bootstrap(
    e: &DriftEstimate,
    h: &HorizonSpec,
    alpha: f64,
    b: usize,
    seed: u64,
) -> Result<IntervalResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ci_bootstrap_with(e, h, alpha, b, &mut rng)
}

/// G in (U, V) coordinates: Φ(U−V) + exp(2UV) Φ(−(U+V)).
pub fn g_uv(u: f64, v: f64) -> DualScaleProb {
    eval_or_one(v - u, v + u, &EvalConfig::default())
}

/// TMU interval: perturb Û by ±z_{α/2}√(t*/t_q) with V̂ held fixed.
pub fn ci_tmu(e: &DriftEstimate, h: &HorizonSpec, alpha: f64) -> Result<IntervalResult> {
    check_alpha(alpha)?;
    check_q(e.q)?;
    let point = point_estimate(e, h)?;
    let sigma = e.sigma2()?.sqrt();
    let rt = h.t_star.sqrt();
    let u = -e.mu_hat * rt / sigma;
    let v = h.x_d / (sigma * rt);
    let shift = normal::quantile(1.0 - 0.5 * alpha) * (h.t_star / e.t_q).sqrt();
    // G increases with U
    Ok(IntervalResult {
        point,
        lower: g_uv(u - shift, v),
        upper: g_uv(u + shift, v),
        alpha,
        method: Method::Tmu,
    })
}

/// Dispatch on the method tag.
pub fn interval(
    method: Method,
    e: &DriftEstimate,
    h: &HorizonSpec,
    alpha: f64,
    b: usize,
    seed: u64,
) -> Result<IntervalResult> {
    match method {
        Method::Wz => ci_wz(e, h, alpha),
        Method::DeltaLogit => ci_delta_logit(e, h, alpha),
        Method::Bootstrap => ci_bootstrap(e, h, alpha, b, seed),
        Method::Tmu => ci_tmu(e, h, alpha),
    }
}
