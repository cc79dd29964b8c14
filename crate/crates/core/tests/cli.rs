//! End-to-end runs of the command-line binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

const SMALL: &[&str] = &["--windows", "100", "--grid", "-30:30:3,-20:10:2", "--seed", "3"];

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mimo-exposure"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn run_small(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--out", out.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    bin(&args)
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn traditional_prints_closed_form_distance() {
    let o = bin(&["traditional", "--scenario", "umi", "--duty", "0.75"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "7.83 m");
    let o = bin(&["traditional", "--scenario", "uma"]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "16.08 m");
}

#[test]
fn config_errors_exit_one_with_named_key() {
    let o = bin(&["run", "--duty", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr(&o).lines().count(), 1);
    assert!(stderr(&o).contains("`duty`"));

    let o = bin(&["run", "--scenario", "rural"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr(&o).lines().count(), 1);

    let dir = tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[simulation]\nwindows = 100\ndrop_duration = \"long\"\n").unwrap();
    let o = bin(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr(&o).lines().count(), 1);
    assert!(stderr(&o).contains("simulation.drop_duration"), "{}", stderr(&o));

    fs::write(&cfg, "[array]\nrowz = 4\n").unwrap();
    let o = bin(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("array.rowz"), "{}", stderr(&o));

    let o = bin(&["run", "--windows", "50", "--percentiles", "95,99"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`windows`"));

    let file = dir.path().join("not-a-dir");
    fs::write(&file, "").unwrap();
    let o = run_small(&file, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("output.dir"));
}

#[test]
fn run_writes_artifacts_deterministically() {
    let a = tempdir().unwrap();
    let b = tempdir().unwrap();
    assert!(run_small(a.path(), &[]).status.success());
    assert!(run_small(b.path(), &["--threads", "1"]).status.success());
    let fa = files(a.path());
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        [
            "cdf_gain.csv",
            "cdf_power.csv",
            "compliance.csv",
            "gain_map_p95.csv",
            "gain_map_p99.csv",
            "summary.json"
        ]
    );
    assert_eq!(fa, files(b.path()));

    let rows = csv_rows(&a.path().join("gain_map_p95.csv"));
    assert_eq!(rows[0], ["azimuth_deg", "elevation_deg", "gain_linear", "gain_dbi"]);
    assert_eq!(rows.len(), 1 + 21 * 16);
    let rows = csv_rows(&a.path().join("cdf_power.csv"));
    assert_eq!(rows.len(), 101);
    assert_eq!(rows[100][1], "1.0000");
    let rows = csv_rows(&a.path().join("compliance.csv"));
    assert_eq!(rows[0], ["azimuth_deg", "elevation_deg", "r_p95_m", "r_p99_m", "r_traditional_m"]);
}

#[test]
fn summary_echo_replays_byte_identically() {
    let a = tempdir().unwrap();
    let b = tempdir().unwrap();
    assert!(run_small(a.path(), &["--scenario", "umi", "--k", "2", "--drop-duration", "10"]).status.success());
    let summary = a.path().join("summary.json");
    let o = bin(&["run", "--config", summary.to_str().unwrap(), "--out", b.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(files(a.path()), files(b.path()));

    let json: serde_json::Value = serde_json::from_slice(&fs::read(&summary).unwrap()).unwrap();
    assert_eq!(json["seed"], 3);
    assert_eq!(json["scenario"], "umi");
    assert_eq!(json["config"]["simulation"]["k"], 2);
    let text = fs::read_to_string(&summary).unwrap();
    assert!(text.starts_with("{\n  \"scenario\": \"umi\",\n  \"seed\": 3,"));
}

#[test]
fn single_cell_sweep_equals_run() {
    let run = tempdir().unwrap();
    let sweep = tempdir().unwrap();
    assert!(run_small(run.path(), &["--k", "2", "--drop-duration", "60"]).status.success());
    let mut args = vec!["sweep", "--out", sweep.path().to_str().unwrap()];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(&["--scenarios", "uma", "--k-values", "2", "--drop-durations", "60"]);
    let o = bin(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(files(run.path()), files(&sweep.path().join("cells/uma_k2_d60")));
    let table = csv_rows(&sweep.path().join("table_I.csv"));
    assert_eq!(table.len(), 2);
}

#[test]
fn sweep_tables_follow_layout_and_record_failures() {
    let out = tempdir().unwrap();
    let mut args = vec!["sweep", "--out", out.path().to_str().unwrap()];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(&["--k-values", "1,2", "--drop-durations", "60,7", "--duty", "0.75"]);
    let o = bin(&args);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let t1 = csv_rows(&out.path().join("table_I.csv"));
    let t2 = csv_rows(&out.path().join("table_II.csv"));
    assert_eq!(t1[0], ["scenario", "k", "drop_duration_s", "r_p95_m", "r_p99_m"]);
    assert_eq!(t2[0], ["scenario", "k", "drop_duration_s", "r_traditional_m", "pct_p95", "pct_p99"]);
    assert_eq!(t1.len(), 1 + 2 * 2 * 2);
    let order: Vec<String> = t1[1..].iter().map(|r| format!("{}/{}/{}", r[0], r[1], r[2])).collect();
    assert_eq!(
        order,
        ["uma/1/60", "uma/1/7", "uma/2/60", "uma/2/7", "umi/1/60", "umi/1/7", "umi/2/60", "umi/2/7"]
    );
    for (r1, r2) in t1[1..].iter().zip(&t2[1..]) {
        if r1[2] == "7" {
            assert_eq!(r1[3], "NA");
            continue;
        }
        // closed-form traditional distance at duty 0.75
        let trad = if r1[0] == "uma" { 13.93 } else { 7.83 };
        for c in 0..2 {
            let abs: f64 = r1[3 + c].parse().unwrap();
            let pct: f64 = r2[4 + c].parse().unwrap();
            let want = 100.0 * abs / trad;
            assert!((pct - want).abs() <= 0.005 * want, "{pct} vs {want}");
        }
    }
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.path().join("sweep.json")).unwrap()).unwrap();
    let failed = report["cells"].as_array().unwrap().iter().filter(|c| !c["error"].is_null()).count();
    assert_eq!(failed, 4);
}
