#![cfg(feature = "cli")]

use std::path::Path;
use std::process::{Command, Output};

use isac_pcrb::config::DEFAULT_CONFIG;
use isac_pcrb::sweep::CSV_HEADER;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_isac-pcrb"))
}

fn write_config(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> std::path::PathBuf {
    let mut v: Value = serde_json::from_str(DEFAULT_CONFIG).unwrap();
    edit(&mut v);
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    p
}

fn small(v: &mut Value) {
    v["sweep"]["rates_bpshz"] = serde_json::json!([0.5, 4.0, 7.0]);
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn strip_timing(csv: &str) -> String {
    let col = CSV_HEADER.split(',').position(|c| c == "solve_ms").unwrap();
    csv.lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f[col] = "";
            f.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn bad_config_exits_two_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", |v| v["link"]["symbols"] = serde_json::json!("many"));
    let o = bin().args(["sweep", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("link.symbols"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), "neg.json", |v| v["prior"]["components"][0]["concentration"] = serde_json::json!(-1.0));
    let o = bin().args(["sweep", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));

    let o = bin().args(["sweep", "--config", "/nonexistent/x.json"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn small_sweep_writes_csv_and_passes_strict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", small);
    let out = dir.path().join("out.csv");
    let o = bin().args(["sweep", "--schemes", "proposed,b1", "--strict", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 1 + 3 * 2);
    assert!(lines[1..].iter().all(|l| l.ends_with(",ok")));
    assert!(!o.stdout.is_empty());
}

#[test]
fn empty_rate_list_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "empty.json", |v| v["sweep"]["rates_bpshz"] = serde_json::json!([]));
    let o = bin().args(["sweep", "--format", "csv", "--config"]).arg(&cfg).output().unwrap();
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.trim_end(), CSV_HEADER, "{}", stderr(&o));
}

#[test]
fn infeasible_rates_are_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "hi.json", |v| v["sweep"]["rates_bpshz"] = serde_json::json!([1.0, 50.0]));
    let o = bin().args(["sweep", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sweep.rates_bpshz[1]"), "{}", stderr(&o));
}

#[test]
fn every_point_failing_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    // no interior-point run closes the duality gap exactly
    let cfg = write_config(dir.path(), "gap.json", |v| {
        small(v);
        v["tolerances"]["gap"] = serde_json::json!(1e-300);
    });
    let o = bin().args(["sweep", "--schemes", "proposed", "--format", "csv", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().count(), 4);
    assert!(stdout.lines().skip(1).all(|l| l.ends_with(",duality_gap")), "{stdout}");
}

#[test]
fn repeated_sweeps_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", small);
    let run = || {
        let o = bin().args(["sweep", "--schemes", "proposed,b2", "--seed", "5", "--format", "csv", "--config"]).arg(&cfg).output().unwrap();
        assert!(o.status.success());
        strip_timing(&String::from_utf8(o.stdout).unwrap())
    };
    assert_eq!(run(), run());
}

#[test]
fn pcrb_of_a_matrix_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", |_| {});
    // isotropic covariance at the full 10 mW budget
    let rows: Vec<String> = (0..16).map(|i| (0..16).map(|j| if i == j { "0.000625" } else { "0" }).collect::<Vec<_>>().join(" ")).collect();
    let m = dir.path().join("r.txt");
    std::fs::write(&m, format!("# isotropic\n{}\n", rows.join("\n"))).unwrap();
    let o = bin().args(["pcrb", "--config"]).arg(&cfg).arg("--covariance").arg(&m).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    let bound: f64 = stdout.lines().find(|l| l.starts_with("pcrb")).unwrap().split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(bound > 0.0 && bound < 2.0);

    std::fs::write(&m, "1 2j\n3 4\n").unwrap();
    let o = bin().args(["pcrb", "--config"]).arg(&cfg).arg("--covariance").arg(&m).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&m, "1 2\n3\n").unwrap();
    let o = bin().args(["pcrb", "--config"]).arg(&cfg).arg("--covariance").arg(&m).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn validate_reports_bound_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", |_| {});
    let o = bin().args(["validate", "--rate", "4.0", "--trials", "100", "--strict", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("mce") && stdout.contains("pcrb"));
    let o = bin().args(["validate", "--rate", "99", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
