//! Coverage experiment for the interval methods, drawing (μ̂, σ̂²) from
//! their exact sampling laws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ci_methods::{self, IntervalResult, Method};
use crate::error::{domain, Error, Result};
use crate::estimate::{wz_from_params, DriftEstimate, HorizonSpec};
use crate::stable_eval::{eval_hybrid, Branch, DualScaleProb, EvalConfig, RiskCoordinates};

/// Parameter grid and run settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub mu_set: Vec<f64>,
    pub sigma2_set: Vec<f64>,
    pub xd_set: Vec<f64>,
    pub tstar_set: Vec<f64>,
    pub q_set: Vec<usize>,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub methods: Vec<Method>,
    #[serde(default = "default_boot")]
    pub bootstrap_b: usize,
}

fn default_boot() -> usize {
    500
}

impl GridSpec {
    /// 216 cells × 2000 replicates.
    pub fn desk() -> Self {
        GridSpec {
            mu_set: vec![-0.3, 0.0, 0.3],
            sigma2_set: vec![0.01, 0.1, 1.0],
            xd_set: vec![3.0, 7.0, 13.0],
            tstar_set: vec![10.0, 20.0, 50.0, 100.0],
            q_set: vec![10, 50],
            reps: 2000,
            alpha: 0.05,
            seed: 2024,
            methods: Method::ALL.to_vec(),
            bootstrap_b: default_boot(),
        }
    }

    /// 2688 cells × 10⁴ replicates.
    pub fn full() -> Self {
        GridSpec {
            mu_set: vec![-0.5, -0.3, -0.1, 0.0, 0.1, 0.3, 0.5],
            sigma2_set: vec![0.001, 0.01, 0.1, 1.0],
            xd_set: vec![3.0, 5.0, 7.0, 9.0, 11.0, 13.0],
            tstar_set: vec![10.0, 20.0, 50.0, 100.0],
            q_set: vec![10, 20, 50, 100],
            reps: 10_000,
            alpha: 0.05,
            seed: 2024,
            methods: Method::ALL.to_vec(),
            bootstrap_b: default_boot(),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk()),
            "full" => Ok(Self::full()),
            other => domain(format!("unknown grid preset '{other}' (desk, full)")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 100 {
            return domain(format!("reps must be >= 100, got {}", self.reps));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return domain("alpha must be in (0, 1)");
        }
        if self.methods.is_empty() {
            return domain("no methods requested");
        }
        if self.mu_set.iter().any(|m| !m.is_finite())
            || self.sigma2_set.iter().any(|s| !(*s > 0.0 && s.is_finite()))
            || self.xd_set.iter().any(|x| !(*x > 0.0 && x.is_finite()))
            || self.tstar_set.iter().any(|t| !(*t > 0.0 && t.is_finite()))
        {
            return domain("grid values must be finite with sigma2, x_d, t* > 0");
        }
        if self.q_set.iter().any(|&q| q < 2) {
            return domain("every q must be at least 2");
        }
        if self.methods.contains(&Method::Bootstrap) && self.bootstrap_b < 100 {
            return domain("bootstrap_b must be >= 100");
        }
        let n = self.cells().len();
        if n == 0 {
            return domain("empty grid");
        }
        Ok(())
    }

    /// Cells in a fixed order; the index is part of the RNG key.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &mu in &self.mu_set {
            for &sigma2 in &self.sigma2_set {
                for &x_d in &self.xd_set {
                    for &t_star in &self.tstar_set {
                        for &q in &self.q_set {
                            out.push(Cell { mu, sigma2, x_d, t_star, q });
                        }
                    }
                }
            }
        }
        out
    }
}

/// One parameter combination; t_q = q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mu: f64,
    pub sigma2: f64,
    pub x_d: f64,
    pub t_star: f64,
    pub q: usize,
}

/// Rejection counts for one method in one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub cell: Cell,
    pub method: Method,
    pub reps: usize,
    /// Replicates where the method produced an interval.
    pub evaluated: usize,
    pub failures: usize,
    /// True G below the lower bound.
    pub miss_low: usize,
    /// True G above the upper bound.
    pub miss_high: usize,
    pub g_true: DualScaleProb,
    /// Scale used for the coverage decision.
    pub scale: Branch,
}

impl CoverageResult {
    fn rate(&self, n: usize) -> f64 {
        if self.evaluated == 0 {
            f64::NAN
        } else {
            n as f64 / self.evaluated as f64
        }
    }

    pub fn rejection(&self) -> f64 {
        self.rate(self.miss_low + self.miss_high)
    }

    pub fn rejection_low(&self) -> f64 {
        self.rate(self.miss_low)
    }

    pub fn rejection_high(&self) -> f64 {
        self.rate(self.miss_high)
    }

    pub fn failure_rate(&self) -> f64 {
        self.failures as f64 / self.reps as f64
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Generator for replicate `rep` of cell `cell` under `seed`.
pub fn replicate_rng(seed: u64, cell: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(cell)));
    rng.set_stream(rep);
    rng
}

struct Sampler {
    mu: f64,
    sd_mu: f64,
    scale: f64,
    chi: ChiSquared<f64>,
}

impl Sampler {
    fn new(mu: f64, sigma2: f64, q: usize, t_q: f64) -> Result<Self> {
        if q < 2 || !(sigma2 > 0.0) || !(t_q > 0.0) {
            return domain("need q >= 2, sigma2 > 0, t_q > 0");
        }
        let chi = ChiSquared::new((q - 1) as f64).map_err(|e| Error::Domain(e.to_string()))?;
        Ok(Sampler { mu, sd_mu: (sigma2 / t_q).sqrt(), scale: sigma2 / q as f64, chi })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let zn: f64 = StandardNormal.sample(rng);
        (self.mu + self.sd_mu * zn, self.scale * self.chi.sample(rng))
    }
}

/// (μ̂, σ̂²) draws; replicate i depends only on (seed, i).
pub fn sample_estimates(
    mu: f64,
    sigma2: f64,
    q: usize,
    t_q: f64,
    reps: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let s = Sampler::new(mu, sigma2, q, t_q)?;
    Ok((0..reps).map(|i| s.draw(&mut replicate_rng(seed, 0, i as u64))).collect())
}

#[derive(Clone, Copy)]
enum Verdict {
    Covered,
    Low,
    High,
}

fn judge(r: &IntervalResult, truth: &DualScaleProb, scale: Branch) -> Verdict {
    match scale {
        Branch::GDirect => {
            if truth.log_g < r.lower.log_g {
                Verdict::Low
            } else if truth.log_g > r.upper.log_g {
                Verdict::High
            } else {
                Verdict::Covered
            }
        }
        // on the Q side a larger G is a smaller Q
        Branch::QDirect => {
            if truth.log_q > r.lower.log_q {
                Verdict::Low
            } else if truth.log_q < r.upper.log_q {
                Verdict::High
            } else {
                Verdict::Covered
            }
        }
    }
}

fn run_cell(g: &GridSpec, index: usize, cell: Cell) -> Result<Vec<CoverageResult>> {
    let (w, z) = wz_from_params(cell.mu, cell.sigma2, cell.x_d, cell.t_star);
    let truth = eval_hybrid(RiskCoordinates::new(w, z)?, &EvalConfig::default());
    let scale = if w < 0.0 { Branch::QDirect } else { Branch::GDirect };
    let t_q = cell.q as f64;
    let sampler = Sampler::new(cell.mu, cell.sigma2, cell.q, t_q)?;
    let h = HorizonSpec::new(cell.t_star, cell.x_d)?;
    let mut out: Vec<CoverageResult> = g
        .methods
        .iter()
        .map(|&method| CoverageResult {
            cell,
            method,
            reps: g.reps,
            evaluated: 0,
            failures: 0,
            miss_low: 0,
            miss_high: 0,
            g_true: truth,
            scale,
        })
        .collect();
    for rep in 0..g.reps {
        let mut rng = replicate_rng(g.seed, index as u64, rep as u64);
        let (mu_hat, s2_hat) = sampler.draw(&mut rng);
        let e = DriftEstimate::from_parts(mu_hat, s2_hat, cell.q, t_q)?;
        for res in out.iter_mut() {
            let r = match res.method {
                Method::Bootstrap => ci_methods::ci_bootstrap_with(&e, &h, g.alpha, g.bootstrap_b, &mut rng),
                m => ci_methods::interval(m, &e, &h, g.alpha, 0, 0),
            };
            match r {
                Ok(r) => {
                    res.evaluated += 1;
                    match judge(&r, &truth, scale) {
                        Verdict::Covered => {}
                        Verdict::Low => res.miss_low += 1,
                        Verdict::High => res.miss_high += 1,
                    }
                }
                Err(_) => res.failures += 1,
            }
        }
    }
    Ok(out)
}

/// Run every requested method on every cell (t_q = q).
pub fn coverage_experiment(g: &GridSpec) -> Result<Vec<CoverageResult>> {
    g.validate()?;
    let cells = g.cells();
    let per_cell: Vec<Vec<CoverageResult>> = cells
        .par_iter()
        .enumerate()
        .map(|(i, &c)| run_cell(g, i, c))
        .collect::<Result<_>>()?;
    Ok(per_cell.into_iter().flatten().collect())
}

/// Summary statistics of per-cell rejection for one method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub cells: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub failures: usize,
}

/// Per-method summary, independent of row order.
pub fn report(results: &[CoverageResult]) -> Result<Vec<MethodSummary>> {
    if results.is_empty() {
        return domain("no coverage results to summarise");
    }
    let mut methods: Vec<Method> = results.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();
    Ok(methods
        .into_iter()
        .map(|m| {
            let mut rates: Vec<f64> = results
                .iter()
                .filter(|r| r.method == m)
                .map(|r| r.rejection())
                .filter(|x| !x.is_nan())
                .collect();
            rates.sort_by(f64::total_cmp);
            let failures = results.iter().filter(|r| r.method == m).map(|r| r.failures).sum();
            let n = rates.len();
            let mean = rates.iter().sum::<f64>() / n as f64;
            let sd = if n > 1 {
                (rates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            MethodSummary {
                method: m,
                cells: n,
                mean,
                sd,
                min: rates.first().copied().unwrap_or(f64::NAN),
                max: rates.last().copied().unwrap_or(f64::NAN),
                failures,
            }
        })
        .collect())
}
