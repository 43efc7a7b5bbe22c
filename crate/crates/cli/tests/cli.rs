use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pas"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn typ_dump_uniform_binary() {
    let out = pas(&[
        "typ-dump",
        "--set",
        "pmf=[0.5,0.5]",
        "--set",
        "n=3",
        "--set",
        "eps=0.1",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    let header: Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), 8);
    assert_eq!(header["count"], 8);
    assert_eq!(header["config"]["n"], 3);
}

#[test]
fn typ_dump_header_matches_body() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "t.json",
        r#"{"pmf":[0.3,0.7],"n":10,"eps":0.2}"#,
    );
    let dump = dir.path().join("dump.txt");
    let out = pas(&[
        "typ-dump",
        "--config",
        &cfg,
        "--out",
        dump.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&dump).unwrap();
    let mut lines = text.lines();
    let header: Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    let body: Vec<Vec<usize>> = lines
        .map(|l| l.split(',').map(|s| s.parse().unwrap()).collect())
        .collect();
    assert_eq!(header["count"].as_u64().unwrap() as usize, body.len());

    // recompute mass and the size bound from the body
    let p = [0.3f64, 0.7];
    let h: f64 = p.iter().map(|q| -q * q.log2()).sum();
    let mass: f64 = body
        .iter()
        .map(|s| s.iter().map(|&a| p[a]).product::<f64>())
        .sum();
    assert!((mass - header["mass"].as_f64().unwrap()).abs() < 1e-12);
    let upper = (body.len() as f64) <= (10.0 * (h + 0.2)).exp2();
    assert_eq!(header["bounds"]["upper_ok"].as_bool().unwrap(), upper);
    let members_ok = body.iter().all(|s| {
        let lp: f64 = s.iter().map(|&a| p[a].log2()).sum();
        (-lp / 10.0 - h).abs() <= 0.2 + 1e-12
    });
    assert_eq!(
        header["bounds"]["member_bounds_ok"].as_bool().unwrap(),
        members_ok
    );
}

#[test]
fn typ_dump_budget_exit_code() {
    let out = pas(&[
        "typ-dump",
        "--set",
        "pmf=[0.5,0.5]",
        "--set",
        "n=40",
        "--set",
        "eps=0.1",
        "--set",
        "budget=1000",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("budget"), "{err}");
}

#[test]
fn unknown_key_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "t.json",
        r#"{"pmf":[0.5,0.5],"n":3,"eps":0.1,"typo":1}"#,
    );
    let out = pas(&["typ-dump", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn air_sweep_rows_and_determinism() {
    let args = [
        "air-sweep",
        "--set",
        "snr_db=[0.72,5.0]",
        "--set",
        "quantizer.num_bins=400",
    ];
    let a = pas(&args);
    assert!(a.status.success());
    let text = stdout(&a);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config: "));
    assert_eq!(lines[1], "snr_db,capacity,h_a,gamma,mi_uniform,r_bmd_star");
    assert_eq!(lines.len(), 4);
    let cap: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
    assert!((cap - 0.562).abs() < 0.005, "{cap}");

    let b = pas(&[&args[..], &["--threads", "1"]].concat());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn air_sweep_empty_grid() {
    let out = pas(&["air-sweep", "--set", "snr_db=[]"]);
    assert_eq!(out.status.code(), Some(2));
}

const SIM: &str = r#"{
  "m": 1,
  "channel": { "kind": "cyclic_pairs", "offset": 2 },
  "amplitude_pmf": [0.8333333333333334, 0.16666666666666666],
  "eps": 0.1,
  "n": 8,
  "gamma": 0.1,
  "decoder": "smd",
  "trials": 400,
  "seed": 9
}"#;

#[test]
fn sim_json_deterministic_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.json", SIM);
    let a = pas(&["sim", "--config", &cfg]);
    let b = pas(&["sim", "--config", &cfg, "--threads", "2"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let doc: Value = serde_json::from_slice(&a.stdout).unwrap();
    let s = &doc["stats"];
    let total = s["errors_total"].as_u64().unwrap();
    let k1 = s["errors_kind1"].as_u64().unwrap();
    let k2 = s["errors_kind2"].as_u64().unwrap();
    assert!(total <= k1 + k2);
    assert_eq!(doc["config"]["seed"], 9);
}

#[test]
fn sim_csv_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.json", SIM);
    let out = pas(&["sim", "--config", &cfg, "--format", "csv"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("# config: "));
    assert_eq!(lines[1].split(',').count(), lines[2].split(',').count());
}

#[test]
fn sim_zero_trials_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.json", SIM);
    let out = pas(&["sim", "--config", &cfg, "--set", "trials=0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn b_typ_report() {
    let out = pas(&[
        "b-typ",
        "--set",
        "input=[0.4,0.6]",
        "--set",
        "transition=[[0.95,0.05],[0.05,0.95]]",
        "--set",
        "n=8",
        "--set",
        "eps=0.4",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let header: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(
        header["count"].as_u64().unwrap() as usize,
        text.lines().count() - 1
    );
    assert_eq!(header["lemma1"]["p2_ok"], Value::Bool(true));
}

#[test]
fn scalar_commands() {
    let out = pas(&[
        "gamma-split",
        "--set",
        "snr_db=9.74",
        "--set",
        "quantizer.num_bins=400",
    ]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((doc["rate"].as_f64().unwrap() - 1.6).abs() < 0.01);

    let out = pas(&["shaping-gap", "--set", "rate=2.5"]);
    assert_eq!(out.status.code(), Some(1));

    let out = pas(&[
        "basic-point",
        "--set",
        "bracket_db=[-2,3]",
        "--set",
        "quantizer.num_bins=400",
    ]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((doc["snr_db"].as_f64().unwrap() - 0.72).abs() < 0.05);
}
