use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use tempfile::TempDir;
use wzrisk::estimate::TimeSeries;
use wzrisk_cli::series_io::{read_series, write_series};

fn wzrisk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wzrisk"))
        .args(args)
        .env_remove("WZRISK_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(out: &str, key: &str) -> f64 {
    let line = out.lines().find(|l| l.starts_with(&format!("{key} ="))).unwrap();
    line.split('=').nth(1).unwrap().trim().parse().unwrap()
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn read_csv(p: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(p).unwrap().records().map(|r| r.unwrap()).collect()
}

#[test]
fn estimate_two_rows() {
    let d = TempDir::new().unwrap();
    let f = write(&d, "s.csv", "time,abundance\n0,100\n1,50\n");
    let out = stdout(&wzrisk(&["estimate", "--input", &f]));
    assert!((field(&out, "mu_hat") - 0.5f64.ln()).abs() < 1e-14);
    assert!((field(&out, "mu_hat") + 0.6931).abs() < 1e-4);
    assert!(out.contains("sigma2_hat = unavailable"));
    assert_eq!(field(&out, "q"), 1.0);
}

#[test]
fn estimate_unequal_spacing_by_hand() {
    let d = TempDir::new().unwrap();
    let f = write(&d, "s.csv", "0,10\n2,12\n5,9\n");
    let out = stdout(&wzrisk(&["estimate", "--input", &f]));
    // increments ln 1.2 over 2 years and ln 0.75 over 3 years
    let mu = 0.9f64.ln() / 5.0;
    let r1 = 1.2f64.ln() - 2.0 * mu;
    let r2 = 0.75f64.ln() - 3.0 * mu;
    let s2 = (r1 * r1 / 2.0 + r2 * r2 / 3.0) / 2.0;
    assert!((field(&out, "mu_hat") - mu).abs() < 1e-15);
    assert!((field(&out, "sigma2_hat") / s2 - 1.0).abs() < 1e-12);
    assert!((field(&out, "sigma2_unbiased") / (2.0 * s2) - 1.0).abs() < 1e-12);
    assert!((field(&out, "r_hat") - (mu + s2 / 2.0)).abs() < 1e-14);
    assert_eq!(field(&out, "t_q"), 5.0);
}

#[test]
fn estimate_64_rows() {
    let d = TempDir::new().unwrap();
    let mut body = String::from("year,index\n");
    for i in 0..64 {
        let n = 1e6 * (-0.05 * i as f64 + 0.3 * ((i * 7 % 11) as f64 / 11.0 - 0.5)).exp();
        body += &format!("{},{}\n", 1957 + i, n);
    }
    let f = write(&d, "eel.csv", &body);
    let out = stdout(&wzrisk(&["estimate", "--input", &f, "--ne", "1"]));
    assert_eq!(field(&out, "q"), 63.0);
    assert_eq!(field(&out, "t_q"), 63.0);
    assert!((field(&out, "x_d") - 1e6f64.ln() - 0.3 * (0.0 - 0.5)).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    let d = TempDir::new().unwrap();
    let bad = write(&d, "bad.csv", "time,abundance\n0,10\n1,ten\n");
    let o = wzrisk(&["estimate", "--input", &bad]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let ragged = write(&d, "ragged.csv", "0,10\n1,2,3\n");
    assert_eq!(wzrisk(&["estimate", "--input", &ragged]).status.code(), Some(3));

    let zero = write(&d, "zero.csv", "0,10\n1,0\n");
    assert_eq!(wzrisk(&["estimate", "--input", &zero]).status.code(), Some(4));

    let missing = d.path().join("nope.csv");
    assert_eq!(wzrisk(&["estimate", "--input", missing.to_str().unwrap()]).status.code(), Some(6));

    assert_eq!(wzrisk(&["span", "--g-true", "0.09999999", "--z", "1", "--target", "0.1"]).status.code(), Some(5));
    assert_eq!(wzrisk(&["span", "--g-true", "0.5", "--z", "1", "--target", "0.1"]).status.code(), Some(4));
    assert_eq!(wzrisk(&["assess", "--preset", "glass", "--tstar=-3"]).status.code(), Some(4));
    assert_eq!(wzrisk(&["assess", "--preset", "glass", "--method", "bca"]).status.code(), Some(4));
    assert_eq!(wzrisk(&["span", "--z", "1"]).status.code(), Some(2));

    let cfg = write(&d, "c.toml", "[assess]\nalpha = \"x\"\n");
    assert_eq!(wzrisk(&["--config", &cfg, "assess", "--preset", "glass"]).status.code(), Some(3));
}

#[test]
fn header_is_optional() {
    let d = TempDir::new().unwrap();
    let a = write(&d, "a.csv", "time,abundance\n0,10\n2,12\n5,9\n");
    let b = write(&d, "b.csv", "# comment\n0 , 10\n2,12\n\n5,9\n");
    assert_eq!(
        stdout(&wzrisk(&["estimate", "--input", &a])),
        stdout(&wzrisk(&["estimate", "--input", &b]))
    );
}

fn assess_csv(extra: &[&str]) -> Vec<csv::StringRecord> {
    let d = TempDir::new().unwrap();
    let out = d.path().join("a.csv");
    let mut args = vec!["assess", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    stdout(&wzrisk(&args));
    read_csv(&out)
}

fn log10_col(r: &csv::StringRecord, i: usize) -> f64 {
    r[i].parse().unwrap()
}

#[test]
fn assess_vu_cell() {
    let rows = assess_csv(&["--mu", "-0.059", "--sigma2", "0.014", "--xd", "12.6", "--q", "63", "--tq", "63"]);
    assert_eq!(rows.len(), 3);
    let vu = &rows[2];
    assert_eq!(&vu[0], "100");
    assert_eq!(&vu[1], "VU");
    assert!((log10_col(vu, 6) - 5e-9f64.log10()).abs() <= 1.0);
    assert!((log10_col(vu, 7) - 5e-17f64.log10()).abs() <= 1.0);
    assert!((log10_col(vu, 8) - 1e-3f64.log10()).abs() <= 1.0);
    assert_eq!(&vu[9], "not met");
}

#[test]
fn presets_match_injection() {
    let a = assess_csv(&["--preset", "glass-elver"]);
    let b = assess_csv(&["--mu", "-0.07", "--sigma2", "0.17", "--xd", "12.4", "--q", "63"]);
    assert_eq!(a, b);
    // printed points 3e-7, 3e-4, 0.11
    for (r, p) in a.iter().zip([3e-7f64, 3e-4, 0.11]) {
        assert!((log10_col(r, 6) - p.log10()).abs() < 0.5, "{r:?}");
    }
}

#[test]
fn alpha_half_nests() {
    let wide = assess_csv(&["--preset", "glass"]);
    let narrow = assess_csv(&["--preset", "glass", "--alpha", "0.5"]);
    for (w, n) in wide.iter().zip(&narrow) {
        assert_eq!(&w[6], &n[6]);
        assert!(log10_col(n, 7) > log10_col(w, 7));
        assert!(log10_col(n, 8) < log10_col(w, 8));
    }
}

#[test]
fn method_all_gives_four_rows_per_horizon() {
    let rows = assess_csv(&["--preset", "glass", "--method", "all", "--B", "200", "--tstar", "10", "--tstar", "100"]);
    assert_eq!(rows.len(), 8);
    let methods: Vec<&str> = rows[..4].iter().map(|r| &r[2]).collect();
    assert_eq!(methods, ["wz", "delta_logit", "bootstrap", "tmu"]);
    assert_eq!(&rows[0][1], "");
    assert_eq!(&rows[4][1], "VU");
}

#[test]
fn assess_from_series() {
    let d = TempDir::new().unwrap();
    let f = write(&d, "s.csv", "0,100\n1,80\n2,90\n3,60\n4,55\n5,50\n");
    let out = d.path().join("o.csv");
    let args = ["assess", "--input", &f, "--ne", "1", "--out", out.to_str().unwrap()];
    stdout(&wzrisk(&args));
    assert_eq!(read_csv(&out).len(), 3);
    // --ne and --xd together is refused
    assert_eq!(wzrisk(&["assess", "--input", &f, "--ne", "1", "--xd", "3"]).status.code(), Some(4));
    assert_eq!(wzrisk(&["assess", "--input", &f]).status.code(), Some(4));
}

#[test]
fn span_prints_small_integer() {
    let out = stdout(&wzrisk(&["span", "--g-true", "1e-6", "--z", "-5", "--tstar", "100", "--target", "0.1"]));
    let n: u64 = out.trim().parse().unwrap();
    assert!((1..=20).contains(&n), "{n}");
    let out = stdout(&wzrisk(&["span", "--g-true", "1e-10", "--z", "20"]));
    assert!(out.trim().parse::<u64>().unwrap() <= 20);
}

#[test]
fn grid_rows() {
    let d = TempDir::new().unwrap();
    let out = d.path().join("g.csv");
    let o = out.to_str().unwrap();
    let base = ["grid", "--nw", "3", "--nz", "3", "--out", o];
    stdout(&wzrisk(&[&base[..], &["--w-min", "1", "--w-max", "3", "--z-min", "-0.5", "--z-max", "2"]].concat()));
    assert_eq!(read_csv(&out).len(), 9);
    // only (1, 0), (0, 1) and (1, 1) have w + z > 0
    stdout(&wzrisk(&[&base[..], &["--w-min", "-1", "--w-max", "1", "--z-min", "-1", "--z-max", "1"]].concat()));
    let rows = read_csv(&out);
    assert_eq!(rows.len(), 3);
    for r in rows {
        let (w, z): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        assert!(w + z > 0.0);
    }
}

#[test]
fn trajectory_default_horizons() {
    let d = TempDir::new().unwrap();
    let out = d.path().join("t.csv");
    let args = ["trajectory", "--mu", "0.1", "--sigma2", "0.04", "--xd", "13", "--out", out.to_str().unwrap()];
    stdout(&wzrisk(&args));
    let rows = read_csv(&out);
    assert_eq!(rows.len(), 6);
    assert_eq!(&rows[5][3], "5.90e-29");
}

#[test]
fn env_dir_and_config_override() {
    let d = TempDir::new().unwrap();
    let cfg = write(&d, "c.toml", "[trajectory]\ntstar = [25.5, 100.0]\n");
    let o = Command::new(env!("CARGO_BIN_EXE_wzrisk"))
        .args(["--config", &cfg, "trajectory", "--mu", "0.1", "--sigma2", "0.04", "--xd", "13", "--tstar", "7"])
        .env("WZRISK_OUT_DIR", d.path().join("res"))
        .output()
        .unwrap();
    assert!(o.status.success());
    let rows = read_csv(&d.path().join("res/trajectory.csv"));
    let ts: Vec<&str> = rows.iter().map(|r| &r[0]).collect();
    assert_eq!(ts, ["25.5", "100"]);
}

#[test]
fn output_ignores_locale() {
    let run = |lc: &str| {
        Command::new(env!("CARGO_BIN_EXE_wzrisk"))
            .args(["assess", "--preset", "glass"])
            .env("LC_ALL", lc)
            .env("LANG", lc)
            .output()
            .unwrap()
            .stdout
    };
    let a = run("C");
    assert_eq!(a, run("de_DE.UTF-8"));
    assert!(String::from_utf8(a).unwrap().contains("0.00692"));
}

#[test]
fn coverage_reruns_are_byte_identical() {
    let d = TempDir::new().unwrap();
    let run = |name: &str, seed: &str| {
        let p = d.path().join(name);
        let o = wzrisk(&["coverage", "--preset", "desk", "--reps", "100", "--seed", seed, "--out", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(p).unwrap()
    };
    let a = run("a.csv", "2024");
    assert_eq!(a, run("b.csv", "2024"));
    assert_ne!(a, run("c.csv", "2025"));
    // 216 cells x 4 methods plus header
    assert_eq!(a.iter().filter(|&&c| c == b'\n').count(), 216 * 4 + 1);
}

fn series() -> impl Strategy<Value = TimeSeries> {
    prop::collection::vec((1e-6f64..50.0, 1e-300f64..1e300), 2..40).prop_map(|steps| {
        let mut t = -1234.5678;
        let (mut ts, mut vs) = (Vec::new(), Vec::new());
        for (dt, v) in steps {
            t += dt;
            ts.push(t);
            vs.push(v);
        }
        TimeSeries::new(ts, vs).unwrap()
    })
}

proptest! {
    #[test]
    fn csv_roundtrip_is_exact(s in series()) {
        let mut buf = Vec::new();
        write_series(&mut buf, &s).unwrap();
        prop_assert_eq!(read_series(&buf[..]).unwrap(), s);
    }
}
