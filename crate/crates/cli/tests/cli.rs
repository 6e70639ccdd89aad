use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn fdrthresh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdrthresh"))
        .args(args)
        .arg("--quiet")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Data rows of a CSV output, skipping the schema comment and the header.
fn rows(file: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(file).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# fdrthresh "));
    lines.next().unwrap();
    lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn four_point_estimate() {
    let dir = TempDir::new().unwrap();
    let x = write(&dir, "x.csv", "3.0\n-1.7\n1.5\n0.2\n");
    let out = dir.path().join("out");
    let o = fdrthresh(&[
        "estimate",
        path(&x),
        "--alpha1",
        "0.2",
        "--alpha2",
        "0.1",
        "--alpha1p",
        "0.3",
        "--alpha2p",
        "0.05",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lambda = 1.4395314709;
    let r = rows(&out.join("estimate.csv"));
    let want = [3.0 - lambda, -(1.7 - lambda), 1.5 - lambda, 0.0];
    for (row, w) in r.iter().zip(want) {
        assert!((num(&row[2]) - w).abs() < 1e-9, "{row:?}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("estimate.json")).unwrap()).unwrap();
    assert!((json["lambda_used"].as_f64().unwrap() - lambda).abs() < 1e-9);
    assert_eq!(
        json["selector_trace"]["exceed_counts"],
        serde_json::json!([1, 2, 3, 3])
    );
    assert!(out.join("config.toml").exists());
}

#[test]
fn binary_input_and_scale() {
    let dir = TempDir::new().unwrap();
    let mut bytes = b"FDRVEC\x00\x01".to_vec();
    bytes.extend_from_slice(&4u64.to_le_bytes());
    for v in [6.0f64, -3.4, 3.0, 0.4] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let x = dir.path().join("x.bin");
    fs::write(&x, bytes).unwrap();
    let out = dir.path().join("out");
    let o = fdrthresh(&[
        "estimate",
        path(&x),
        "--scale",
        "2",
        "--alpha1",
        "0.2",
        "--alpha2",
        "0.1",
        "--alpha1p",
        "0.3",
        "--alpha2p",
        "0.05",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&out.join("estimate.csv"));
    assert!((num(&r[0][2]) - 2.0 * (3.0 - 1.4395314709)).abs() < 1e-8);
    assert_eq!(num(&r[3][2]), 0.0);
}

#[test]
fn validation_failures_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let empty = write(&dir, "empty.csv", "");
    let out = dir.path().join("out");
    let o = fdrthresh(&["estimate", path(&empty), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no values"));

    let x = write(&dir, "x.csv", "1\n2\n");
    let bad_levels = fdrthresh(&["estimate", path(&x), "--alpha1", "0.9", "--out", path(&out)]);
    assert_eq!(bad_levels.status.code(), Some(2));
    let hard = fdrthresh(&[
        "estimate",
        path(&x),
        "--family",
        "hard",
        "--out",
        path(&out),
    ]);
    assert_eq!(hard.status.code(), Some(2));
    let missing = fdrthresh(&[
        "estimate",
        path(&dir.path().join("nope.csv")),
        "--out",
        path(&out),
    ]);
    assert_eq!(missing.status.code(), Some(2));
    let cfg = write(&dir, "bad.toml", "replicate = 3\n");
    let unknown = fdrthresh(&[
        "experiment",
        "regret",
        "--config",
        path(&cfg),
        "--out",
        path(&out),
    ]);
    assert_eq!(unknown.status.code(), Some(2));
    let no_kind = fdrthresh(&["experiment", "--out", path(&out)]);
    assert_eq!(no_kind.status.code(), Some(2));
}

#[test]
fn no_rejections_give_zero_vector() {
    let dir = TempDir::new().unwrap();
    let x = write(&dir, "x.csv", "0.1\n-0.2\n0.05\n0.3\n");
    let out = dir.path().join("out");
    let o = fdrthresh(&["estimate", path(&x), "--out", path(&out)]);
    assert!(o.status.success());
    assert!(rows(&out.join("estimate.csv"))
        .iter()
        .all(|r| num(&r[2]) == 0.0));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("estimate.json")).unwrap()).unwrap();
    assert_eq!(json["lambda_used"], "inf");
}

#[test]
fn point_mass_fdr_curve_is_flat_with_warning() {
    let dir = TempDir::new().unwrap();
    let prior = write(&dir, "p.csv", "0\n0\n0\n");
    let out = dir.path().join("out");
    let o = fdrthresh(&[
        "fdr-curve",
        path(&prior),
        "--points",
        "21",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let r = rows(&out.join("fdr_curve.csv"));
    assert_eq!(r.len(), 21);
    assert!(r
        .iter()
        .all(|row| num(&row[1]) == 1.0 && row[2] == "FdrCurve"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("fdr_curve.json")).unwrap()).unwrap();
    assert_eq!(json["degenerate"], true);
    assert_eq!(json["population_levels"]["xi1_star"], "inf");
    assert!(fs::read_to_string(out.join("fdr_curve.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn surrogate_risk_increases_with_b0() {
    let dir = TempDir::new().unwrap();
    let prior = write(&dir, "p.csv", "atom,weight\n0,0.9\n2.5,0.05\n-4,0.05\n");
    let run = |b0: &str| {
        let out = dir.path().join(format!("b{b0}"));
        let o = fdrthresh(&[
            "risk-curve",
            path(&prior),
            "--functional",
            "surrogate",
            "--b0",
            b0,
            "--out",
            path(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("risk_curve.json")).unwrap())
                .unwrap();
        let curve: Vec<f64> = rows(&out.join("risk_curve.csv"))
            .iter()
            .map(|r| num(&r[1]))
            .collect();
        (curve, json["optimal"]["eta_g_star"].as_f64().unwrap())
    };
    let (low, eta_low) = run("10");
    let (high, eta_high) = run("40");
    assert_eq!(low.len(), high.len());
    assert!(low.iter().zip(&high).all(|(a, b)| a <= b));
    assert!(low.iter().zip(&high).skip(1).any(|(a, b)| a < b));
    assert!(eta_low <= eta_high);
}

#[test]
fn risk_curve_marks_optimal_levels() {
    let dir = TempDir::new().unwrap();
    let prior = write(&dir, "p.csv", "0\n0\n0\n3\n");
    let out = dir.path().join("out");
    let o = fdrthresh(&["risk-curve", path(&prior), "--out", path(&out)]);
    assert!(o.status.success());
    let svg = fs::read_to_string(out.join("risk_curve.svg")).unwrap();
    assert!(svg.contains(">λ_G</text>"));
    let r = rows(&out.join("risk_curve.csv"));
    assert_eq!(r.len(), 401);
    assert_eq!(num(&r[0][1]), 1.0);
}

#[test]
fn zero_mean_regret_is_not_applicable() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", "replicates = 40\n[experiment]\nkind = \"regret\"\nns = [50]\ntheta = { kind = \"zero\" }\n");
    let out = dir.path().join("out");
    let o = fdrthresh(&["experiment", "--config", path(&cfg), "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let header = fs::read_to_string(out.join("regret.csv")).unwrap();
    let columns: Vec<&str> = header.lines().nth(1).unwrap().split(',').collect();
    let r = rows(&out.join("regret.csv"));
    let col = |name: &str| &r[0][columns.iter().position(|c| *c == name).unwrap()];
    assert_eq!(col("ratio"), "NA");
    assert_eq!(col("ratio_status"), "not_applicable");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("regret.json")).unwrap()).unwrap();
    assert!(json[0]["ratio"].is_null());
}

#[test]
fn resolved_config_reproduces_outputs() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("first");
    let o = fdrthresh(&[
        "experiment",
        "common_mean",
        "--n",
        "100",
        "--mu",
        "0,1",
        "--replicates",
        "30",
        "--seed",
        "17",
        "--out",
        path(&first),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let second = dir.path().join("second");
    let cfg = first.join("config.toml");
    let o = fdrthresh(&["experiment", "--config", path(&cfg), "--out", path(&second)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["common_mean.csv", "common_mean.json", "config.toml"] {
        assert_eq!(
            fs::read(first.join(f)).unwrap(),
            fs::read(second.join(f)).unwrap(),
            "{f}"
        );
    }
    let third = dir.path().join("third");
    fdrthresh(&[
        "experiment",
        "--config",
        path(&cfg),
        "--seed",
        "18",
        "--out",
        path(&third),
    ]);
    assert_ne!(
        fs::read(first.join("common_mean.csv")).unwrap(),
        fs::read(third.join("common_mean.csv")).unwrap()
    );
}

#[test]
fn other_experiments_write_reports() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("mm");
    let o = fdrthresh(&[
        "experiment",
        "minimax",
        "--n",
        "1000",
        "--p",
        "0",
        "--radius",
        "0.005",
        "--replicates",
        "30",
        "--out",
        path(&out),
        "--format",
        "csv",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&out.join("minimax.csv"));
    assert_eq!(r[0][5], "5");
    assert!(!out.join("minimax.svg").exists());

    let out = dir.path().join("conc");
    let o = fdrthresh(&[
        "experiment",
        "concentration",
        "--n",
        "100",
        "--lambda",
        "1",
        "--replicates",
        "400",
        "--family",
        "firm",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&out.join("concentration.csv"));
    assert!((num(&r[0][5]) - 0.09).abs() < 1e-12);
    assert!(fs::read_to_string(out.join("concentration.svg"))
        .unwrap()
        .contains("<polyline"));
}
