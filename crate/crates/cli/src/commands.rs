//! Subcommands.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use wzrisk::ci_methods::{self, Method, DEFAULT_B};
use wzrisk::estimate::{fit_drift, log_distance, DriftEstimate, HorizonSpec};
use wzrisk::mc_harness::{self, GridSpec};
use wzrisk::risk_analysis::{self, Region, SpanRequest};
use wzrisk::Branch;

use crate::config;
use crate::errors::usage;
use crate::format::{self, Category};
use crate::series_io;

/// Env var naming the default output directory.
pub const OUT_DIR_ENV: &str = "WZRISK_OUT_DIR";

/// Named (μ̂, σ̂², x̂_d) triples; q = t_q = 63 for all three.
pub const PRESETS: [(&str, f64, f64, f64); 3] = [
    ("glass", -0.0054, 0.33, 16.0),
    ("glass-elver", -0.07, 0.17, 12.4),
    ("yellow-silver", -0.059, 0.014, 12.6),
];
pub const PRESET_Q: usize = 63;

#[derive(Debug, Parser)]
#[command(name = "wzrisk", version, about = "Extinction risk under drifted Brownian motion, with confidence intervals")]
pub struct Cli {
    /// TOML file; its [<command>] table overrides flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit drift and variance to a time,abundance CSV.
    Estimate(EstimateArgs),
    /// Point estimates and intervals at assessment horizons.
    Assess(AssessArgs),
    /// Shortest observation span meeting a CI upper-bound target.
    Span(SpanArgs),
    /// Monte Carlo rejection rates of the interval methods.
    Coverage(CoverageArgs),
    /// CI width over a (w, z) region.
    Grid(GridArgs),
    /// G and CI width along a list of horizons.
    Trajectory(TrajectoryArgs),
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Threshold abundance; prints x_d = ln(n0/ne) from the first row.
    #[arg(long)]
    pub ne: Option<f64>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssessArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// glass, glass-elver or yellow-silver
    #[arg(long)]
    pub preset: Option<String>,
    /// Injected μ̂ (with --sigma2, --q, --tq, --xd).
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub tq: Option<f64>,
    #[arg(long)]
    pub ne: Option<f64>,
    #[arg(long)]
    pub xd: Option<f64>,
    #[arg(long = "tstar")]
    #[serde(default)]
    pub tstar: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// wz, delta_logit, bootstrap, tmu or all; repeatable
    #[arg(long)]
    #[serde(default)]
    pub method: Vec<String>,
    #[arg(long = "B", default_value_t = DEFAULT_B)]
    #[serde(rename = "B")]
    pub b: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpanArgs {
    #[arg(long)]
    pub g_true: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub z: f64,
    #[arg(long = "tstar", default_value_t = 100.0)]
    pub tstar: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Largest acceptable CI upper bound.
    #[arg(long, default_value_t = 0.1)]
    pub target: f64,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageArgs {
    /// desk or full
    #[arg(long, default_value = "desk")]
    pub preset: String,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    pub method: Vec<String>,
    #[arg(long = "B")]
    #[serde(rename = "B")]
    pub b: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Full grid replacement; config file only.
    #[arg(skip)]
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridArgs {
    #[arg(long, allow_hyphen_values = true, default_value_t = -40.0)]
    pub w_min: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 40.0)]
    pub w_max: f64,
    #[arg(long, default_value_t = 81)]
    pub nw: usize,
    #[arg(long, allow_hyphen_values = true, default_value_t = -40.0)]
    pub z_min: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 40.0)]
    pub z_max: f64,
    #[arg(long, default_value_t = 81)]
    pub nz: usize,
    #[arg(long, default_value_t = 63)]
    pub q: usize,
    #[arg(long, default_value_t = 63.0)]
    pub tq: f64,
    #[arg(long = "tstar", default_value_t = 100.0)]
    pub tstar: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long)]
    pub sigma2: f64,
    #[arg(long)]
    pub xd: f64,
    #[arg(long, default_value_t = 63)]
    pub q: usize,
    #[arg(long, default_value_t = 63.0)]
    pub tq: f64,
    #[arg(long = "tstar")]
    #[serde(default)]
    pub tstar: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub const DEFAULT_HORIZONS: [f64; 3] = [25.5, 42.5, 100.0];
pub const DEFAULT_TRAJECTORY: [f64; 6] = [25.5, 42.5, 100.0, 250.0, 500.0, 1000.0];

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = match &cli.config {
        Some(p) => config::load(p)?,
        None => toml::Table::new(),
    };
    match cli.command {
        Command::Estimate(a) => cmd_estimate(config::overlay(a, cfg.get("estimate"))?, &mut io::stdout().lock()),
        Command::Assess(a) => cmd_assess(config::overlay(a, cfg.get("assess"))?, &mut io::stdout().lock()),
        Command::Span(a) => cmd_span(config::overlay(a, cfg.get("span"))?, &mut io::stdout().lock()),
        Command::Coverage(a) => cmd_coverage(config::overlay(a, cfg.get("coverage"))?),
        Command::Grid(a) => cmd_grid(config::overlay(a, cfg.get("grid"))?),
        Command::Trajectory(a) => cmd_trajectory(config::overlay(a, cfg.get("trajectory"))?),
    }
}

/// --out, else $WZRISK_OUT_DIR/<name>.csv, else None (stdout).
pub fn resolve_out(out: Option<&Path>, name: &str) -> Option<PathBuf> {
    if let Some(p) = out {
        return Some(p.to_path_buf());
    }
    std::env::var_os(OUT_DIR_ENV)
        .filter(|d| !d.is_empty())
        .map(|d| PathBuf::from(d).join(format!("{name}.csv")))
}

fn open_out(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn parse_methods(names: &[String]) -> anyhow::Result<Vec<Method>> {
    let mut out = Vec::new();
    for n in names {
        if n.eq_ignore_ascii_case("all") {
            out.extend(Method::ALL);
        } else {
            match n.parse::<Method>() {
                Ok(m) => out.push(m),
                Err(_) => return usage(format!("unknown method '{n}' (wz, delta_logit, bootstrap, tmu, all)")),
            }
        }
    }
    out.sort();
    out.dedup();
    if out.is_empty() {
        out.push(Method::Wz);
    }
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "unavailable".into(), format::num)
}

pub fn cmd_estimate(a: EstimateArgs, w: &mut dyn Write) -> anyhow::Result<()> {
    let Some(input) = a.input else { return usage("estimate needs --input") };
    let s = series_io::read_series_file(&input)?;
    let e = fit_drift(&s)?;
    writeln!(w, "mu_hat = {}", e.mu_hat)?;
    writeln!(w, "sigma2_hat = {}", opt(e.sigma2_hat))?;
    writeln!(w, "sigma2_unbiased = {}", opt(e.sigma2_unbiased))?;
    writeln!(w, "q = {}", e.q)?;
    writeln!(w, "t_q = {}", e.t_q)?;
    writeln!(w, "r_hat = {}", opt(e.r_hat))?;
    if let Some(ne) = a.ne {
        writeln!(w, "x_d = {}", log_distance(s.values()[0], ne)?)?;
    }
    Ok(())
}

/// Estimate and x_d from exactly one of --input, --preset, --mu.
pub fn assessment_inputs(a: &AssessArgs) -> anyhow::Result<(DriftEstimate, f64)> {
    let sources = [a.input.is_some(), a.preset.is_some(), a.mu.is_some()];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return usage("give exactly one of --input, --preset or --mu");
    }
    if a.ne.is_some() && a.xd.is_some() {
        return usage("give at most one of --ne and --xd");
    }
    if let Some(input) = &a.input {
        let s = series_io::read_series_file(input)?;
        let e = fit_drift(&s)?;
        let x_d = match (a.xd, a.ne) {
            (Some(x), _) => x,
            (None, Some(ne)) => log_distance(s.values()[0], ne)?,
            (None, None) => return usage("with --input, give --ne or --xd"),
        };
        return Ok((e, x_d));
    }
    if let Some(name) = &a.preset {
        let Some(&(_, mu, s2, xd)) = PRESETS.iter().find(|p| p.0 == name) else {
            return usage(format!("unknown preset '{name}' (glass, glass-elver, yellow-silver)"));
        };
        if a.ne.is_some() {
            return usage("presets carry x_d; use --xd to override");
        }
        let e = DriftEstimate::from_parts(mu, s2, PRESET_Q, PRESET_Q as f64)?;
        return Ok((e, a.xd.unwrap_or(xd)));
    }
    let (Some(mu), Some(s2), Some(q), Some(xd)) = (a.mu, a.sigma2, a.q, a.xd) else {
        return usage("injected estimates need --mu, --sigma2, --q and --xd");
    };
    let e = DriftEstimate::from_parts(mu, s2, q, a.tq.unwrap_or(q as f64))?;
    Ok((e, xd))
}

/// One assessment row.
#[derive(Debug, Clone)]
pub struct AssessRow {
    pub t_star: f64,
    pub category: Option<Category>,
    pub result: ci_methods::IntervalResult,
}

pub fn assess_rows(a: &AssessArgs) -> anyhow::Result<Vec<AssessRow>> {
    let (e, x_d) = assessment_inputs(a)?;
    let methods = parse_methods(&a.method)?;
    let horizons = if a.tstar.is_empty() { DEFAULT_HORIZONS.to_vec() } else { a.tstar.clone() };
    let mut rows = Vec::new();
    for &t in &horizons {
        let h = HorizonSpec::new(t, x_d)?;
        for &m in &methods {
            let result = ci_methods::interval(m, &e, &h, a.alpha, a.b, a.seed)
                .with_context(|| format!("{m} interval at t* = {t}"))?;
            rows.push(AssessRow { t_star: t, category: Category::for_horizon(t), result });
        }
    }
    Ok(rows)
}

pub fn cmd_assess(a: AssessArgs, w: &mut dyn Write) -> anyhow::Result<()> {
    let rows = assess_rows(&a)?;
    writeln!(w, "{:>8}  {:<4}{:<12}{:>12}  {:>25}  {}", "t*", "cat", "method", "G", "CI", "verdict")?;
    for r in &rows {
        let ci = format!("({}, {})", format::human(&r.result.lower), format::human(&r.result.upper));
        let (cat, verdict) = match r.category {
            Some(c) => (c.label(), format!("G >= {} {}", c.threshold(), format::verdict(&r.result, c).label())),
            None => ("-", String::new()),
        };
        writeln!(
            w,
            "{:>8}  {:<4}{:<12}{:>12}  {:>25}  {}",
            r.t_star,
            cat,
            r.result.method.name(),
            format::human(&r.result.point),
            ci,
            verdict
        )?;
    }
    if let Some(path) = resolve_out(a.out.as_deref(), "assess") {
        let mut wtr = csv::Writer::from_writer(open_out(Some(&path))?);
        wtr.write_record(["t_star", "category", "method", "point", "lower", "upper", "log10_point", "log10_lower", "log10_upper", "verdict"])?;
        for r in &rows {
            let res = &r.result;
            wtr.write_record([
                format::num(r.t_star),
                r.category.map_or("", |c| c.label()).to_string(),
                res.method.name().to_string(),
                format::plain(&res.point),
                format::plain(&res.lower),
                format::plain(&res.upper),
                format::num(res.point.log10_g()),
                format::num(res.lower.log10_g()),
                format::num(res.upper.log10_g()),
                r.category.map_or("", |c| format::verdict(res, c).label()).to_string(),
            ])?;
        }
        wtr.flush()?;
    }
    Ok(())
}

pub fn cmd_span(a: SpanArgs, w: &mut dyn Write) -> anyhow::Result<()> {
    let r = SpanRequest { g_true: a.g_true, z_fixed: a.z, t_star: a.tstar, alpha: a.alpha, g_target: a.target };
    let t_q = risk_analysis::required_span(&r)?;
    writeln!(w, "{t_q}")?;
    Ok(())
}

/// Grid from the preset with flag/config overrides applied.
pub fn coverage_spec(a: &CoverageArgs) -> anyhow::Result<GridSpec> {
    let mut g = match &a.grid {
        Some(g) => g.clone(),
        None => GridSpec::preset(&a.preset)?,
    };
    if let Some(r) = a.reps {
        g.reps = r;
    }
    if let Some(s) = a.seed {
        g.seed = s;
    }
    if let Some(al) = a.alpha {
        g.alpha = al;
    }
    if let Some(b) = a.b {
        g.bootstrap_b = b;
    }
    if !a.method.is_empty() {
        g.methods = parse_methods(&a.method)?;
    }
    g.validate()?;
    Ok(g)
}

fn scale_name(b: Branch) -> &'static str {
    match b {
        Branch::GDirect => "G",
        Branch::QDirect => "Q",
    }
}

pub fn cmd_coverage(a: CoverageArgs) -> anyhow::Result<()> {
    let g = coverage_spec(&a)?;
    let results = mc_harness::coverage_experiment(&g)?;
    let path = resolve_out(a.out.as_deref(), "coverage");
    let mut wtr = csv::Writer::from_writer(open_out(path.as_deref())?);
    wtr.write_record([
        "mu", "sigma2", "x_d", "t_star", "q", "method", "reps", "evaluated", "failures", "miss_low", "miss_high",
        "rejection", "log10_g_true", "scale",
    ])?;
    for r in &results {
        let c = &r.cell;
        wtr.write_record([
            format::num(c.mu),
            format::num(c.sigma2),
            format::num(c.x_d),
            format::num(c.t_star),
            c.q.to_string(),
            r.method.name().to_string(),
            r.reps.to_string(),
            r.evaluated.to_string(),
            r.failures.to_string(),
            r.miss_low.to_string(),
            r.miss_high.to_string(),
            format::num(r.rejection()),
            format::num(r.g_true.log10_g()),
            scale_name(r.scale).to_string(),
        ])?;
    }
    wtr.flush()?;
    drop(wtr);
    let summary = mc_harness::report(&results)?;
    let mut e = io::stderr().lock();
    writeln!(e, "{} cells x {} reps, seed {}", g.cells().len(), g.reps, g.seed)?;
    writeln!(e, "{:<12}{:>8}{:>8}{:>8}{:>8}{:>10}", "method", "mean", "sd", "min", "max", "failures")?;
    for s in summary {
        writeln!(
            e,
            "{:<12}{:>8.4}{:>8.4}{:>8.4}{:>8.4}{:>10}",
            s.method.name(),
            s.mean,
            s.sd,
            s.min,
            s.max,
            s.failures
        )?;
    }
    if let Some(p) = path {
        writeln!(e, "wrote {}", p.display())?;
    }
    Ok(())
}

pub fn cmd_grid(a: GridArgs) -> anyhow::Result<()> {
    let region = Region { w_min: a.w_min, w_max: a.w_max, n_w: a.nw, z_min: a.z_min, z_max: a.z_max, n_z: a.nz };
    let cells = risk_analysis::ci_width_grid(&region, a.q, a.tq, a.tstar, a.alpha)?;
    let mut wtr = csv::Writer::from_writer(open_out(resolve_out(a.out.as_deref(), "grid").as_deref())?);
    wtr.write_record(["w", "z", "g", "ci_width"])?;
    for c in cells.iter().filter(|c| !c.mask) {
        wtr.write_record([format::num(c.w), format::num(c.z), format::num(c.g), format::num(c.width)])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn cmd_trajectory(a: TrajectoryArgs) -> anyhow::Result<()> {
    let horizons = if a.tstar.is_empty() { DEFAULT_TRAJECTORY.to_vec() } else { a.tstar.clone() };
    let rows = risk_analysis::horizon_trajectory(a.mu, a.sigma2, a.xd, a.q, a.tq, &horizons, a.alpha)?;
    let mut wtr = csv::Writer::from_writer(open_out(resolve_out(a.out.as_deref(), "trajectory").as_deref())?);
    wtr.write_record(["t_star", "w", "z", "g", "log10_g", "ci_width"])?;
    for r in &rows {
        wtr.write_record([
            format::num(r.t_star),
            format::num(r.w),
            format::num(r.z),
            format::plain(&r.g),
            format::num(r.g.log10_g()),
            format::num(r.ci_width),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
