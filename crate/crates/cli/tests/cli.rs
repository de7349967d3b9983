//! End-to-end tests of the `liqrec` binary: determinism, exit codes, table
//! shapes, environment overrides, and the write→load round trip.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_liqrec"))
}

fn write_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    let base = "\
seed = 11

[params]
settlement_lag_days = 1

[simulate]
n_days = 750
n_events = 50

[threshold]
n_bootstrap = 5

[placebo]
n_draws = 10
n_dates = 8
";
    std::fs::write(&path, format!("{base}\n{extra}")).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path).unwrap();
    rdr.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn manifests_byte_identical_for_fixed_config_and_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = run(bin().args(["--config"]).arg(&cfg).arg("--out").arg(dir).arg("simulate"));
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ma = std::fs::read(a.join("manifest_simulate.json")).unwrap();
    let mb = std::fs::read(b.join("manifest_simulate.json")).unwrap();
    assert_eq!(ma, mb, "same (config, seed) must give byte-identical manifests");

    // A different seed must change the data hashes.
    let c = tmp.path().join("c");
    let out = run(bin()
        .args(["--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&c)
        .args(["--seed", "99", "simulate"]));
    assert!(out.status.success());
    let mc = std::fs::read(c.join("manifest_simulate.json")).unwrap();
    assert_ne!(ma, mc, "a different seed must change the outputs");
}

#[test]
fn unknown_config_key_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "not_a_real_key = 5\n").unwrap();
    let out = run(bin().arg("--config").arg(&cfg).arg("simulate"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn invalid_param_domain_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad_domain.toml");
    std::fs::write(&cfg, "seed = 1\n[params]\nvulnerability = -1.0\n").unwrap();
    let out = run(bin().arg("--config").arg(&cfg).arg("calibrate"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_file_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let out = run(bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("o"))
        .env("LIQREC_PANEL", "/definitely/not/here.csv")
        .env("LIQREC_EVENTS", "/also/not/here.csv")
        .args(["estimate", "lp"]));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn degenerate_estimation_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 1\n[simulate]\nn_days = 60\nn_events = 0\n[placebo]\nn_draws = 5\nn_dates = 5\n",
    )
    .unwrap();
    let out =
        run(bin().arg("--config").arg(&cfg).arg("--out").arg(tmp.path().join("o")).arg("placebo"));
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn simulate_with_zero_events_writes_empty_catalog() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "seed = 3\n[simulate]\nn_days = 80\nn_events = 0\n").unwrap();
    let dir = tmp.path().join("o");
    let out = run(bin().arg("--config").arg(&cfg).arg("--out").arg(&dir).arg("simulate"));
    assert!(out.status.success());
    assert_eq!(read_csv(&dir.join("events.csv")).len(), 0, "header-only catalog");
    assert_eq!(read_csv(&dir.join("panel.csv")).len(), 80);
}

#[test]
fn event_study_emits_window_rows_plus_joint_f() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let dir = tmp.path().join("o");
    let out = run(bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .args(["estimate", "event-study"]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.join("event_study.csv"));
    let day_rows: Vec<_> = rows.iter().filter(|r| !r[0].starts_with("joint:")).collect();
    let joint_rows: Vec<_> = rows.iter().filter(|r| r[0].starts_with("joint:")).collect();
    assert_eq!(day_rows.len(), 9, "window [-5,3] spans nine event-time days");
    assert_eq!(joint_rows.len(), 1);
    assert!(joint_rows[0][0].contains("pre-trend"));
    // The baseline day is present, flagged, and exactly zero.
    let base = day_rows.iter().find(|r| r[0] == "-1").unwrap();
    assert_eq!(base[1], "0");
    assert_eq!(base[7], "true");
    // Every estimated row carries all inference columns.
    for r in day_rows.iter().filter(|r| r[7] == "false") {
        for col in 1..=6 {
            assert!(!r[col].is_empty(), "missing column {col} on day {}", r[0]);
        }
    }
}

#[test]
fn threshold_bootstrap_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let dir = tmp.path().join("o");
    let out = run(bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .args(["estimate", "threshold", "--bootstrap", "7"]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.join("threshold.csv"));
    let b = rows.iter().find(|r| r[0] == "n_bootstrap").unwrap();
    assert_eq!(b[1], "7");
    // The SSR profile is written as plot data alongside the result.
    assert!(!read_csv(&dir.join("threshold_grid.csv")).is_empty());
}

#[test]
fn estimates_from_written_files_match_in_memory_simulation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let sim_dir = tmp.path().join("sim");
    let out = run(bin().arg("--config").arg(&cfg).arg("--out").arg(&sim_dir).arg("simulate"));
    assert!(out.status.success());

    let mem_dir = tmp.path().join("mem");
    let out = run(bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&mem_dir)
        .args(["estimate", "giv"]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let file_dir = tmp.path().join("file");
    let out = run(bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&file_dir)
        .env("LIQREC_PANEL", sim_dir.join("panel.csv"))
        .env("LIQREC_EVENTS", sim_dir.join("events.csv"))
        .args(["estimate", "giv"]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let a = std::fs::read(mem_dir.join("giv_summary.csv")).unwrap();
    let b = std::fs::read(file_dir.join("giv_summary.csv")).unwrap();
    assert_eq!(a, b, "write→parse round trip must not change any estimate");
}

#[test]
fn env_seed_override_applies_and_flag_wins() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let out = run(bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&a)
        .env("LIQREC_SEED", "11")
        .arg("simulate"));
    assert!(out.status.success());
    // Flag overrides the environment.
    let out = run(bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&b)
        .env("LIQREC_SEED", "999")
        .args(["--seed", "11", "simulate"]));
    assert!(out.status.success());
    let ma = std::fs::read(a.join("manifest_simulate.json")).unwrap();
    let mb = std::fs::read(b.join("manifest_simulate.json")).unwrap();
    assert_eq!(ma, mb, "--seed must beat LIQREC_SEED; both runs used seed 11");
}

#[test]
fn calibrate_reproduces_published_elasticity_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let dir = tmp.path().join("o");
    let out = run(bin().arg("--config").arg(&cfg).arg("--out").arg(&dir).arg("calibrate"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.join("eta_sensitivity.csv"));
    assert_eq!(rows.len(), 6);
    let base = rows.iter().find(|r| r[0] == "1").expect("unit price-impact row");
    let want = [3.73, 0.88, 2.01, 5.45];
    for (i, w) in want.iter().enumerate() {
        let got: f64 = base[i + 1].parse().unwrap();
        assert!((got - w).abs() < 0.01, "column {i}: got {got}, want {w}");
    }
    // JSON twin exists and parses.
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("eta_sensitivity.json")).unwrap()).unwrap();
    assert_eq!(json["columns"][0], "lambda");
}

#[test]
fn placebo_writes_one_row_per_draw() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let dir = tmp.path().join("o");
    let out = run(bin().arg("--config").arg(&cfg).arg("--out").arg(&dir).arg("placebo"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_csv(&dir.join("placebo_draws.csv")).len(), 10);
    let p = read_csv(&dir.join("placebo_p.csv"));
    assert_eq!(p.len(), 8, "eight non-baseline days in the [-5,3] window");
    for row in &p {
        let v: f64 = row[2].parse().unwrap();
        assert!((0.0..=1.0).contains(&v), "empirical p out of range: {v}");
    }
}

#[test]
fn report_writes_summary_and_manifest_lists_every_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let dir = tmp.path().join("o");
    let out = run(bin().arg("--config").arg(&cfg).arg("--out").arg(&dir).arg("report"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("manifest_report.json")).unwrap()).unwrap();
    let listed: Vec<&str> =
        manifest["outputs"].as_array().unwrap().iter().map(|o| o["path"].as_str().unwrap()).collect();
    for want in ["report_summary.csv", "event_study.csv", "threshold.csv", "giv_summary.csv",
                 "lp_irf.csv", "did.csv", "monthly.csv", "eta_sensitivity.csv"] {
        assert!(listed.contains(&want), "manifest missing {want}");
    }
    // Every listed file exists with the advertised byte count.
    for o in manifest["outputs"].as_array().unwrap() {
        let path = dir.join(o["path"].as_str().unwrap());
        let bytes = std::fs::metadata(&path).unwrap().len();
        assert_eq!(bytes, o["bytes"].as_u64().unwrap(), "{}", path.display());
    }
}
