//! stable_eval and normal checked against the MPFR oracle.

use wzrisk::normal;
use wzrisk::stable_eval::{self, Branch, EvalConfig, RiskCoordinates};
use wzrisk_oracle as oracle;

fn rc(w: f64, z: f64) -> RiskCoordinates {
    RiskCoordinates::new(w, z).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn normal_cdf_matches_oracle() {
    let mut x = -37.0;
    while x <= 8.0 {
        let r = oracle::norm_cdf_f64(x);
        assert!(rel(normal::cdf(x), r) < 2e-15, "x = {x}: {} vs {r}", normal::cdf(x));
        x += 0.173;
    }
}

#[test]
fn log_normal_cdf_matches_oracle() {
    for &x in &[-1e4, -1234.5, -200.0, -40.0, -38.5, -20.0, -5.7, -1.0, -0.3, 0.0, 0.5, 2.0, 6.0, 9.0, 30.0] {
        let r = oracle::log_norm_cdf(x);
        let v = normal::log_cdf(x);
        assert!(rel(v, r) < 1e-14, "x = {x}: {v} vs {r}");
    }
    // the value the accuracy plan hinges on
    assert!(rel(normal::log_cdf(-40.0), oracle::log_norm_cdf(-40.0)) < 1e-12);
}

#[test]
fn log_mills_matches_oracle() {
    for &y in &[0.0, 0.3, 0.67, 0.7, 1.5, 5.0, 10.0, 25.0, 40.0] {
        let r = oracle::mills_ratio(y).ln();
        assert!((normal::log_mills(y) - r).abs() < 2e-15 * r.abs().max(1.0), "y = {y}");
    }
}

#[test]
fn s7_at_switch_point() {
    let v = stable_eval::mills_s7(19.0).unwrap();
    let r = oracle::mills_ratio(19.0);
    assert!(rel(v, r) < 1e-13, "{v} vs {r}");
}

#[test]
fn log_g_deep_right_tail() {
    let cfg = EvalConfig::default();
    let lg = stable_eval::log_g(rc(40.0, 50.0), &cfg);
    let r = oracle::log_g(40.0, 50.0);
    // error of the exponentiated value
    assert!((lg - r).abs() < 1e-12, "{lg} vs {r}");
}

#[test]
fn log_q_where_linear_g_rounds_to_one() {
    let cfg = EvalConfig::default();
    let lq = stable_eval::log_q(rc(-8.0, 30.0), &cfg);
    let r = oracle::log_q(-8.0, 30.0);
    assert!(rel(lq, r) < 1e-13, "{lq} vs {r}");
    // Q = Φ(−8) − φ(8)R(30): the second term is about a quarter of Q here
    assert!(lq < normal::log_cdf(-8.0));
}

#[test]
fn hybrid_q_branch_far_left() {
    let cfg = EvalConfig::default();
    let p = stable_eval::eval_hybrid(rc(-30.0, 40.0), &cfg);
    assert_eq!(p.branch, Branch::QDirect);
    let r = oracle::log_q(-30.0, 40.0);
    assert!((p.log_q - r).abs() < 1e-12, "{} vs {r}", p.log_q);
}

#[test]
fn right_tail_table_value_vs_oracle() {
    let cfg = EvalConfig::default();
    let v = stable_eval::g_linear(rc(18.8679, 23.9570), &cfg);
    assert!(rel(v, oracle::g(18.8679, 23.9570)) < 1e-12);
}

#[test]
fn mills_regime_vs_oracle() {
    let cfg = EvalConfig::default();
    let v = stable_eval::g_linear(rc(0.0, 20.0), &cfg);
    assert!(rel(v, oracle::g(0.0, 20.0)) < 1e-14);
}

#[test]
fn complement_on_grid() {
    let cfg = EvalConfig::default();
    let mut w = -10.0;
    while w <= 10.0 {
        let mut z = -10.0;
        while z <= 10.0 {
            if w + z > 0.0 {
                let c = rc(w, z);
                let lg = stable_eval::log_g(c, &cfg);
                let lq = stable_eval::log_q(c, &cfg);
                if lg > -36.0 && lq > -36.0 {
                    let s = lg.exp() + lq.exp();
                    assert!((s - 1.0).abs() <= 1e-12, "({w}, {z}): {s}");
                }
            }
            z += 0.25;
        }
        w += 0.25;
    }
}

#[test]
fn mean_digits_coarse_grid() {
    let cfg = EvalConfig::default();
    let (mut n, mut sum, mut worst) = (0usize, 0.0, 17.0f64);
    let mut wst = (0.0, 0.0);
    for i in 0..=80 {
        let w = -40.0 + i as f64;
        for j in 0..=80 {
            let z = -40.0 + j as f64;
            if w + z <= 0.0 {
                continue;
            }
            let p = stable_eval::eval_hybrid(rc(w, z), &cfg);
            let (gr, qr) = oracle::g_and_q(w, z);
            let (approx, exact) = match p.branch {
                Branch::GDirect => (p.log_g.exp(), gr),
                Branch::QDirect => (p.log_q.exp(), qr),
            };
            if exact.to_f64() < f64::MIN_POSITIVE || p.loss_of_information() {
                continue;
            }
            let d = oracle::digits(approx, &exact);
            n += 1;
            sum += d;
            if d < worst {
                worst = d;
                wst = (w, z);
            }
        }
    }
    let mean = sum / n as f64;
    println!("cells {n} mean digits {mean:.3} worst {worst:.2} at {wst:?}");
    assert!(mean >= 13.0);
    assert!(worst >= 11.0);
}
