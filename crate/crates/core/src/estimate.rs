//! Maximum-likelihood drift and variance from a log-abundance series, and
//! the (w, z) transform at a prediction horizon.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Observation times and positive abundances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return domain(format!(
                "{} times but {} abundances",
                times.len(),
                values.len()
            ));
        }
        if times.len() < 2 {
            return domain("a series needs at least two observations");
        }
        for (i, (&t, &n)) in times.iter().zip(&values).enumerate() {
            if !t.is_finite() {
                return domain(format!("observation {i}: non-finite time {t}"));
            }
            if !(n > 0.0) || !n.is_finite() {
                return domain(format!("observation {i}: abundance must be positive, got {n}"));
            }
        }
        for (i, w) in times.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return domain(format!(
                    "times must increase strictly: t[{}] = {} after t[{}] = {}",
                    i + 1,
                    w[1],
                    i,
                    w[0]
                ));
            }
        }
        Ok(TimeSeries { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// μ̂, σ̂² and friends from q increments over a span t_q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    pub mu_hat: f64,
    /// ML variance; `None` when q = 1.
    pub sigma2_hat: Option<f64>,
    /// q/(q−1) σ̂²; `None` when q = 1.
    pub sigma2_unbiased: Option<f64>,
    pub q: usize,
    pub t_q: f64,
    /// μ̂ + σ̂²/2; `None` when q = 1.
    pub r_hat: Option<f64>,
}

impl DriftEstimate {
    /// Build an estimate from reported values (μ̂, σ̂², q, t_q).
    pub fn from_parts(mu_hat: f64, sigma2_hat: f64, q: usize, t_q: f64) -> Result<Self> {
        if !mu_hat.is_finite() {
            return domain(format!("non-finite drift {mu_hat}"));
        }
        if !(sigma2_hat >= 0.0) || !sigma2_hat.is_finite() {
            return domain(format!("variance must be non-negative, got {sigma2_hat}"));
        }
        if q < 1 {
            return domain("need at least one increment");
        }
        if !(t_q > 0.0) || !t_q.is_finite() {
            return domain(format!("span must be positive, got {t_q}"));
        }
        let available = q > 1;
        Ok(DriftEstimate {
            mu_hat,
            sigma2_hat: available.then_some(sigma2_hat),
            sigma2_unbiased: available.then(|| q as f64 / (q as f64 - 1.0) * sigma2_hat),
            q,
            t_q,
            r_hat: available.then(|| mu_hat + 0.5 * sigma2_hat),
        })
    }

    /// σ̂², or an error when it is unavailable.
    pub fn sigma2(&self) -> Result<f64> {
        self.sigma2_hat.ok_or(Error::VarianceUnavailable(self.q))
    }
}

/// Horizon t*, log-distance x_d and (optionally) the threshold it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonSpec {
    pub t_star: f64,
    pub x_d: f64,
    pub n_e: Option<f64>,
}

impl HorizonSpec {
    pub fn new(t_star: f64, x_d: f64) -> Result<Self> {
        if !(t_star > 0.0) || !t_star.is_finite() {
            return domain(format!("horizon must be positive, got {t_star}"));
        }
        if !(x_d > 0.0) || !x_d.is_finite() {
            return domain(format!("x_d must be positive, got {x_d}"));
        }
        Ok(HorizonSpec { t_star, x_d, n_e: None })
    }

    pub fn with_threshold(t_star: f64, n0: f64, n_e: f64) -> Result<Self> {
        let mut h = HorizonSpec::new(t_star, log_distance(n0, n_e)?)?;
        h.n_e = Some(n_e);
        Ok(h)
    }
}

/// ML fit from the increments of log-abundance.
pub fn fit_drift(s: &TimeSeries) -> Result<DriftEstimate> {
    let x: Vec<f64> = s.values.iter().map(|v| v.ln()).collect();
    let t = &s.times;
    let q = t.len() - 1;
    let t_q = t[q] - t[0];
    let mu = (x[q] - x[0]) / t_q;
    let mut ss = 0.0;
    for i in 1..=q {
        let tau = t[i] - t[i - 1];
        if !(tau > 0.0) {
            return domain(format!("non-positive time step at observation {i}"));
        }
        let r = x[i] - x[i - 1] - mu * tau;
        ss += r * r / tau;
    }
    DriftEstimate::from_parts(mu, ss / q as f64, q, t_q)
}

/// x_d = ln(n₀/n_e).
pub fn log_distance(n0: f64, ne: f64) -> Result<f64> {
    if !(ne > 0.0) || !(n0 > 0.0) {
        return domain(format!("abundances must be positive, got n0 = {n0}, ne = {ne}"));
    }
    if n0 <= ne {
        return domain(format!("already at or below the threshold: n0 = {n0} <= ne = {ne}"));
    }
    Ok((n0 / ne).ln())
}

/// (w, z) from true or estimated parameters.
pub fn wz_from_params(mu: f64, sigma2: f64, x_d: f64, t_star: f64) -> (f64, f64) {
    let s = (sigma2 * t_star).sqrt();
    ((mu * t_star + x_d) / s, (-mu * t_star + x_d) / s)
}

/// (ŵ, ẑ) with the ML σ̂.
pub fn transform_wz(e: &DriftEstimate, h: &HorizonSpec) -> Result<(f64, f64)> {
    let s2 = e.sigma2()?;
    if s2 == 0.0 {
        return Err(Error::Degenerate);
    }
    Ok(wz_from_params(e.mu_hat, s2, h.x_d, h.t_star))
}
