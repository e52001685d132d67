//! Sampling structure of (ŵ, ẑ) and what it implies for Ĝ: correlation,
//! gradient, delta and mixture variances, width landscapes, horizon
//! trajectories and the required observation span.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::{GaussHermite, GaussLegendre};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::ci_methods::ci_wz_coords;
use crate::error::{domain, Error, Result};
use crate::estimate::wz_from_params;
use crate::normal;
use crate::stable_eval::{
    self, eval_hybrid, one_minus_z_s7, DualScaleProb, EvalConfig, RiskCoordinates,
};

/// Cap on the span search.
pub const SPAN_CAP: u64 = 1_000_000;

/// Constants of the (ŵ, ẑ) covariance that depend only on (q, t_q, t*).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignConstants {
    pub c_q: f64,
    pub a: f64,
    pub d: f64,
    pub k: f64,
    /// t*/t_q
    pub s2: f64,
}

/// Γ((q−2)/2)/Γ((q−1)/2) through log-Gamma.
fn gamma_ratio(q: f64) -> f64 {
    (ln_gamma(0.5 * (q - 2.0)) - ln_gamma(0.5 * (q - 1.0))).exp()
}

pub fn design_constants(q: usize, t_q: f64, t_star: f64) -> Result<DesignConstants> {
    if q <= 3 {
        return domain(format!("design constants need q > 3, got {q}"));
    }
    if !(t_q > 0.0 && t_star > 0.0) {
        return domain("t_q and t* must be positive");
    }
    let qf = q as f64;
    let r = gamma_ratio(qf);
    let a = qf * t_star * t_star / ((qf - 3.0) * t_q);
    // 1/(q−3) − r²/2 loses digits for large q; (1 − (q−3)r²/2)/(q−3) is the same
    let bracket = (1.0 - 0.5 * (qf - 3.0) * r * r) / (qf - 3.0);
    let d = qf * t_star * bracket;
    Ok(DesignConstants { c_q: d / t_star, a, d, k: a / d, s2: t_star / t_q })
}

/// Corr(ŵ, ẑ) = (−k + wz)/√((k + w²)(k + z²)).
pub fn corr_wz(w: f64, z: f64, d: &DesignConstants) -> Result<f64> {
    if !(w + z > 0.0) {
        return domain(format!("need w + z > 0, got w={w}, z={z}"));
    }
    let k = d.k;
    Ok(((-k + w * z) / ((k + w * w).sqrt() * (k + z * z).sqrt())).clamp(-1.0, 1.0))
}

/// (∂G/∂w, ∂G/∂z).
pub fn gradient_g(c: RiskCoordinates) -> (f64, f64) {
    let cfg = EvalConfig::default();
    let (w, z) = (c.w(), c.z());
    let phi_w = normal::pdf(w);
    if z > 0.0 {
        // second term = φ(w)R(z), so both partials carry the factor φ(w)
        let r = stable_eval::log_mills_switched(z, &cfg).exp();
        let gz = if z >= cfg.z_thr { one_minus_z_s7(z) } else { 1.0 - z * r };
        (-phi_w * (1.0 + w * r), -phi_w * gz)
    } else {
        let e = stable_eval::second_term(w, z, &cfg);
        (-phi_w - w * e, z * e - phi_w)
    }
}

/// ∇Gᵀ Σ ∇G.
pub fn var_g_delta(c: RiskCoordinates, d: &DesignConstants) -> f64 {
    let (w, z) = (c.w(), c.z());
    let (gw, gz) = gradient_g(c);
    let k = d.k;
    d.c_q * (gw * gw * (k + w * w) + 2.0 * gw * gz * (-k + w * z) + gz * gz * (k + z * z))
}

/// Quadrature layout for the mixture variance.
#[derive(Debug, Clone)]
pub struct MixtureQuadrature {
    inner: GaussHermite,
    inner_coarse: GaussHermite,
    /// Doubled inner rules, built on first use when the base rule is too
    /// coarse (large t*/t_q sharpens the integrand in Z).
    refined: Vec<OnceLock<GaussHermite>>,
    panel: GaussLegendre,
    panel_coarse: GaussLegendre,
    bvn: GaussLegendre,
    /// Outer rule is `panels` Gauss–Legendre panels of `panel` nodes.
    pub panels: usize,
    /// Half-width of the outer range in units of χ around √ν.
    pub outer_halfwidth: f64,
    /// Wanted absolute accuracy on the variance.
    pub tol: f64,
}

/// Largest inner rule the refinement will build.
pub const MAX_INNER_NODES: usize = 512;

fn nz(n: usize) -> NonZeroUsize {
    NonZeroUsize::new(n).expect("node count must be positive")
}

impl MixtureQuadrature {
    pub fn new(inner_nodes: usize, outer_nodes: usize, tol: f64) -> Result<Self> {
        if inner_nodes < 4 || inner_nodes > MAX_INNER_NODES || outer_nodes < 16 || outer_nodes % 8 != 0 {
            return domain("need 4 <= inner <= 512 and outer a multiple of 8, at least 16");
        }
        let mut refined = Vec::new();
        let mut n = 2 * inner_nodes;
        while n <= MAX_INNER_NODES {
            refined.push(OnceLock::new());
            n *= 2;
        }
        Ok(MixtureQuadrature {
            inner: GaussHermite::new(nz(inner_nodes)),
            inner_coarse: GaussHermite::new(nz(inner_nodes / 2)),
            refined,
            panel: GaussLegendre::new(nz(outer_nodes / 8)),
            panel_coarse: GaussLegendre::new(nz(outer_nodes / 16)),
            bvn: GaussLegendre::new(nz(32)),
            panels: 8,
            outer_halfwidth: 9.0,
            tol,
        })
    }
}

impl Default for MixtureQuadrature {
    fn default() -> Self {
        MixtureQuadrature::new(64, 128, 1e-10).expect("default layout is valid")
    }
}

impl MixtureQuadrature {
    /// Inner rule at refinement level `i` (0 is the base rule).
    fn inner_rule(&self, i: usize) -> &GaussHermite {
        if i == 0 {
            return &self.inner;
        }
        self.refined[i - 1].get_or_init(|| GaussHermite::new(nz(self.inner.degree() << i)))
    }
}

/// Mean and variance of Ĝ; `err` compares against halved inner and outer rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureMoments {
    pub mean: f64,
    pub var: f64,
    pub err: f64,
}

/// Φ₂(a, a; ρ) for 0 ≤ ρ < 1.
fn bvn_equal(a: f64, rho: f64, rule: &GaussLegendre) -> f64 {
    let p = normal::cdf(a);
    let top = rho.asin();
    if top == 0.0 {
        return p * p;
    }
    let tail = rule.integrate(0.0, top, |th| (-a * a / (1.0 + th.sin())).exp());
    p * p + tail / (2.0 * std::f64::consts::PI)
}

/// (M₁, M₂) at a fixed λ.
fn inner_moments(lam: f64, w: f64, z: f64, s: f64, gh: &GaussHermite, bvn: &GaussLegendre) -> (f64, f64) {
    let cfg = EvalConfig::default();
    let ls = lam * s;
    let root = (1.0 + ls * ls).sqrt();
    let a = -lam * w / root;
    let rho = ls * ls / (1.0 + ls * ls);
    // G = Φ(−ŵ) + T; the Φ parts integrate in closed form, T by Gauss–Hermite
    let base1 = normal::cdf(a);
    let base2 = bvn_equal(a, rho, bvn);
    let norm = std::f64::consts::PI.sqrt().recip();
    let (mut m1, mut m2) = (0.0, 0.0);
    for (x, wt) in gh.iter() {
        let zz = std::f64::consts::SQRT_2 * x;
        let wh = lam * (w + s * zz);
        let zh = lam * (z - s * zz);
        let t = stable_eval::second_term(wh, zh, &cfg);
        m1 += wt * t;
        m2 += wt * t * (2.0 * normal::sf(wh) + t);
    }
    (base1 + norm * m1, base2 + norm * m2)
}

fn outer(
    c: RiskCoordinates,
    q: usize,
    s: f64,
    quad: &MixtureQuadrature,
    gh: &GaussHermite,
    panel: &GaussLegendre,
) -> (f64, f64) {
    let nu = (q - 1) as f64;
    let centre = nu.sqrt();
    let lo = (centre - quad.outer_halfwidth).max(0.0);
    let hi = centre + quad.outer_halfwidth;
    let log_norm = (0.5 * nu - 1.0) * std::f64::consts::LN_2 + ln_gamma(0.5 * nu);
    let sq = (q as f64).sqrt();
    let h = (hi - lo) / quad.panels as f64;
    let (mut mass, mut e1, mut e2) = (0.0, 0.0, 0.0);
    for p in 0..quad.panels {
        let (a, b) = (lo + p as f64 * h, lo + (p + 1) as f64 * h);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, wt) in panel.iter() {
            let v = mid + half * x;
            if v <= 0.0 {
                continue;
            }
            let dens = ((nu - 1.0) * v.ln() - 0.5 * v * v - log_norm).exp();
            let weight = wt * half * dens;
            if weight == 0.0 {
                continue;
            }
            let (m1, m2) = inner_moments(sq / v, c.w(), c.z(), s, gh, &quad.bvn);
            mass += weight;
            e1 += weight * m1;
            e2 += weight * m2;
        }
    }
    // renormalise so rounding in the χ density cannot bias the moments
    (e1 / mass, e2 / mass)
}

/// Mean and variance of Ĝ from the mixture (Λ(w + sZ), Λ(z − sZ)).
pub fn mixture_moments(
    c: RiskCoordinates,
    q: usize,
    t_q: f64,
    t_star: f64,
    quad: &MixtureQuadrature,
) -> Result<MixtureMoments> {
    if q <= 1 {
        return Err(Error::VarianceUnavailable(q));
    }
    if !(t_q > 0.0 && t_star > 0.0) {
        return domain("t_q and t* must be positive");
    }
    let s = (t_star / t_q).sqrt();
    let v = |(m1, m2): (f64, f64)| (m2 - m1 * m1).max(0.0);
    let mut level = 0;
    let (mut e1, mut e2) = outer(c, q, s, quad, &quad.inner, &quad.panel);
    let mut err_inner = (v((e1, e2)) - v(outer(c, q, s, quad, &quad.inner_coarse, &quad.panel))).abs();
    // double the inner rule while it is the limiting error
    while err_inner > quad.tol.max(1e-6 * v((e1, e2))) && level < quad.refined.len() {
        level += 1;
        let prev = v((e1, e2));
        (e1, e2) = outer(c, q, s, quad, quad.inner_rule(level), &quad.panel);
        err_inner = (v((e1, e2)) - prev).abs();
    }
    let var = v((e1, e2));
    let err_outer = (var - v(outer(c, q, s, quad, quad.inner_rule(level), &quad.panel_coarse))).abs();
    Ok(MixtureMoments { mean: e1, var, err: err_inner.max(err_outer) })
}

/// Var(Ĝ) from the mixture representation.
pub fn var_g_mixture(
    c: RiskCoordinates,
    q: usize,
    t_q: f64,
    t_star: f64,
    quad: &MixtureQuadrature,
) -> Result<f64> {
    let m = mixture_moments(c, q, t_q, t_star, quad)?;
    if m.err > quad.tol.max(1e-6 * m.var) {
        return Err(Error::Quadrature { achieved: m.err, wanted: quad.tol });
    }
    Ok(m.var)
}

/// One cell of a width landscape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub w: f64,
    pub z: f64,
    pub g: f64,
    pub width: f64,
    /// true when w + z ≤ 0 (no value)
    pub mask: bool,
}

/// Rectangle in (w, z) sampled on an evenly spaced lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub w_min: f64,
    pub w_max: f64,
    pub n_w: usize,
    pub z_min: f64,
    pub z_max: f64,
    pub n_z: usize,
}

fn lattice(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// w–z CI width at synthetic estimates equal to each lattice point.
pub fn ci_width_grid(region: &Region, q: usize, t_q: f64, t_star: f64, alpha: f64) -> Result<Vec<GridCell>> {
    if region.n_w == 0 || region.n_z == 0 {
        return domain("grid needs at least one point per axis");
    }
    let ws = lattice(region.w_min, region.w_max, region.n_w);
    let zs = lattice(region.z_min, region.z_max, region.n_z);
    let cells: Vec<(f64, f64)> = zs.iter().flat_map(|&z| ws.iter().map(move |&w| (w, z))).collect();
    cells
        .into_par_iter()
        .map(|(w, z)| {
            if !(w + z > 0.0) {
                return Ok(GridCell { w, z, g: f64::NAN, width: f64::NAN, mask: true });
            }
            let r = ci_wz_coords(w, z, q, t_q, t_star, alpha)?;
            Ok(GridCell { w, z, g: r.point.g(), width: r.width(), mask: false })
        })
        .collect()
}

/// One row of a horizon trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t_star: f64,
    pub w: f64,
    pub z: f64,
    pub g: DualScaleProb,
    pub ci_width: f64,
}

/// G and the w–z CI width (estimates set to truth) along a list of horizons.
pub fn horizon_trajectory(
    mu: f64,
    sigma2: f64,
    x_d: f64,
    q: usize,
    t_q: f64,
    horizons: &[f64],
    alpha: f64,
) -> Result<Vec<TrajectoryRow>> {
    if !(sigma2 > 0.0 && x_d > 0.0) {
        return domain("need sigma2 > 0 and x_d > 0");
    }
    horizons
        .par_iter()
        .map(|&t| {
            if !(t > 0.0) {
                return domain(format!("horizon must be positive, got {t}"));
            }
            let (w, z) = wz_from_params(mu, sigma2, x_d, t);
            let r = ci_wz_coords(w, z, q, t_q, t, alpha)?;
            Ok(TrajectoryRow { t_star: t, w, z, g: r.point, ci_width: r.width() })
        })
        .collect()
}

/// Inputs for the required-span solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanRequest {
    pub g_true: f64,
    pub z_fixed: f64,
    pub t_star: f64,
    pub alpha: f64,
    pub g_target: f64,
}

/// w with G(w, z) = g, by bisection on ln G.
pub fn solve_w(g: f64, z: f64) -> Result<f64> {
    if !(g > 0.0 && g < 1.0) {
        return domain(format!("target G must be in (0, 1), got {g}"));
    }
    let cfg = EvalConfig::default();
    let target = g.ln();
    let f = |w: f64| -> f64 {
        match RiskCoordinates::new(w, z) {
            Ok(c) => eval_hybrid(c, &cfg).log_g - target,
            Err(_) => -target,
        }
    };
    let mut lo = -z;
    let mut step = 1.0f64.max(z.abs());
    let mut hi = lo + step;
    while f(hi) > 0.0 {
        lo = hi;
        step *= 2.0;
        hi += step;
        if hi > 1e8 {
            return Err(Error::Convergence { what: "solve_w bracket", lo, hi, last: f(hi) });
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let v = f(mid);
        if v.abs() <= 1e-12 {
            return Ok(mid);
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Upper w–z bound for G at span t_q = q with estimates set to truth.
pub fn span_upper_bound(w: f64, z: f64, t_q: u64, t_star: f64, alpha: f64) -> Result<DualScaleProb> {
    let r = ci_wz_coords(w, z, t_q as usize, t_q as f64, t_star, alpha)?;
    Ok(r.upper)
}

/// Smallest integer span whose upper bound falls to g_target or below.
pub fn required_span(r: &SpanRequest) -> Result<u64> {
    required_span_capped(r, SPAN_CAP)
}

pub fn required_span_capped(r: &SpanRequest, cap: u64) -> Result<u64> {
    if !(r.g_target > 0.0 && r.g_target < 1.0) {
        return domain(format!("g_target must be in (0, 1), got {}", r.g_target));
    }
    if !(r.g_true < r.g_target) {
        return domain("g_true must be below g_target");
    }
    if !(r.alpha > 0.0 && r.alpha < 1.0 && r.t_star > 0.0) {
        return domain("need 0 < alpha < 1 and t* > 0");
    }
    let w = solve_w(r.g_true, r.z_fixed)?;
    let log_target = r.g_target.ln();
    let ok = |t: u64| -> Result<bool> {
        Ok(span_upper_bound(w, r.z_fixed, t, r.t_star, r.alpha)?.log_g <= log_target)
    };
    let mut bad = 1u64;
    let mut good = 2u64;
    loop {
        if ok(good)? {
            break;
        }
        if good >= cap {
            return Err(Error::Unsatisfiable { cap });
        }
        bad = good;
        good = (good * 2).min(cap);
    }
    while good - bad > 1 {
        let mid = bad + (good - bad) / 2;
        if ok(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

/// −G_w/G_z, the slope of the equal-risk contour through (w, z).
pub fn contour_slope(c: RiskCoordinates) -> f64 {
    let (gw, gz) = gradient_g(c);
    -gw / gz
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_for_the_eel_design() {
        let d = design_constants(63, 63.0, 25.0).unwrap();
        assert!((d.k - 47.82).abs() < 0.01, "{}", d.k);
    }

    #[test]
    fn small_q_rejected() {
        assert!(design_constants(3, 3.0, 1.0).is_err());
        assert!(design_constants(4, 4.0, 1.0).is_ok());
    }

    #[test]
    fn zero_correlation_on_hyperbola() {
        let d = design_constants(63, 63.0, 100.0).unwrap();
        let w = 3.0;
        let z = d.k / w;
        assert!(corr_wz(w, z, &d).unwrap().abs() < 1e-15);
        assert!(corr_wz(-1.0, 0.5, &d).is_err());
    }

    #[test]
    fn bvn_equal_known_values() {
        let rule = GaussLegendre::new(nz(32));
        // Φ₂(0,0;ρ) = 1/4 + asin ρ /(2π)
        for rho in [0.0f64, 0.3, 0.5, 0.9] {
            let want = 0.25 + rho.asin() / (2.0 * std::f64::consts::PI);
            assert!((bvn_equal(0.0, rho, &rule) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn solve_w_round_trips() {
        for &(g, z) in &[(1e-6, 20.0), (0.3, -5.0), (1e-40, 3.0), (0.9, 1.0)] {
            let w = solve_w(g, z).unwrap();
            let c = RiskCoordinates::new(w, z).unwrap();
            let got = eval_hybrid(c, &EvalConfig::default()).log_g;
            assert!((got - g.ln()).abs() < 1e-9, "{g} {z}: {got}");
        }
    }
}
