//! The `nbrw` binary: exit codes, determinism and file outputs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nbrw(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nbrw")).args(args).current_dir(dir).env_remove("NBRW_OUT_DIR").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

/// Lines after the header, which names the engine.
fn body(p: &Path) -> Vec<String> {
    fs::read_to_string(p).unwrap().lines().skip(1).map(str::to_owned).collect()
}

#[test]
fn both_engines_write_the_same_process() {
    let d = tempfile::tempdir().unwrap();
    let o = nbrw(&["simulate", "--n", "8", "--t-mult", "5", "--engine", "both", "--out", "t.jsonl"], d.path());
    assert_eq!(code(&o), 0, "{}", text(&o));
    let (a, b) = (d.path().join("t.direct.jsonl"), d.path().join("t.brw.jsonl"));
    assert_eq!(body(&a), body(&b));
    assert_eq!(body(&a).len(), 16);
    assert!(fs::read_to_string(d.path().join("manifest.jsonl")).unwrap().contains("\"command\":\"simulate\""));
}

#[test]
fn usage_errors_exit_one() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&nbrw(&["simulate", "--n", "1"], d.path())), 1);
    assert_eq!(code(&nbrw(&["simulate", "--n", "8", "--t", "4", "--t-mult", "2"], d.path())), 1);
    let o = nbrw(&["simulate", "--n", "8", "--t", "12", "--events"], d.path());
    assert_eq!(code(&o), 1);
    assert!(text(&o).contains("4ℓ_N"));
    assert_eq!(code(&nbrw(&["frobnicate"], d.path())), 1);
    assert_eq!(code(&nbrw(&["--help"], d.path())), 0);
}

#[test]
fn capacity_errors_exit_three() {
    let d = tempfile::tempdir().unwrap();
    let o = nbrw(&["simulate", "--n", "1073741824", "--t-mult", "5"], d.path());
    assert_eq!(code(&o), 3, "{}", text(&o));
}

#[test]
fn repeated_simulation_writes_identical_files() {
    let d = tempfile::tempdir().unwrap();
    for name in ["a.bin", "b.bin"] {
        assert_eq!(code(&nbrw(&["simulate", "--n", "32", "--t", "40", "--seed", "9", "--out", name], d.path())), 0);
    }
    assert_eq!(fs::read(d.path().join("a.bin")).unwrap(), fs::read(d.path().join("b.bin")).unwrap());
}

#[test]
fn default_output_directory_comes_from_the_environment() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_nbrw"))
        .args(["simulate", "--n", "4", "--t", "10"])
        .current_dir(d.path())
        .env("NBRW_OUT_DIR", d.path().join("runs"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", text(&o));
    assert!(d.path().join("runs/traj_n4_t10_s0_r0.jsonl").exists());
}

#[test]
fn verify_passes_engine_output_and_flags_corruption() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&nbrw(&["simulate", "--n", "16", "--t", "30", "--out", "t.jsonl"], d.path())), 0);
    let ok = nbrw(&["verify", "--traj", "t.jsonl", "--eta", "0.5", "--rho", "0.1", "--json", "v.json"], d.path());
    assert_eq!(code(&ok), 0, "{}", text(&ok));
    assert!(d.path().join("v.json").exists());

    // Swap the two lowest positions of generation 20 so the order breaks.
    let src = fs::read_to_string(d.path().join("t.jsonl")).unwrap();
    let mut lines: Vec<String> = src.lines().map(str::to_owned).collect();
    let mut g: serde_json::Value = serde_json::from_str(&lines[21]).unwrap();
    let pos = g["positions"].as_array_mut().unwrap();
    let top = pos[15].clone();
    pos[0] = serde_json::json!(top.as_f64().unwrap() + 1.0);
    lines[21] = g.to_string();
    fs::write(d.path().join("bad.jsonl"), lines.join("\n") + "\n").unwrap();
    let bad = nbrw(&["verify", "--traj", "bad.jsonl", "--eta", "0.5", "--rho", "0.1"], d.path());
    assert_eq!(code(&bad), 2, "{}", text(&bad));
    assert!(text(&bad).contains("counterexample"));
}

#[test]
fn verify_reports_parse_errors_with_a_location() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("junk.jsonl"), "{\"format\": \"nbrw-trajectory\"\n").unwrap();
    let o = nbrw(&["verify", "--traj", "junk.jsonl", "--eta", "0.5", "--rho", "0.1"], d.path());
    assert_eq!(code(&o), 1);
    assert!(text(&o).contains("line"), "{}", text(&o));
    let o = nbrw(&["verify", "--traj", "junk.jsonl"], d.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn fixture_verifies_prop_b_non_vacuously() {
    let d = tempfile::tempdir().unwrap();
    let o = nbrw(&["fixture", "--kind", "propB", "--out", "f.bin"], d.path());
    assert_eq!(code(&o), 0, "{}", text(&o));
    let o = nbrw(&["verify", "--traj", "f.bin", "--schedule", "relaxed", "--sample", "128"], d.path());
    assert_eq!(code(&o), 0, "{}", text(&o));
    let line = String::from_utf8_lossy(&o.stdout).lines().find(|l| l.starts_with("prop_B")).unwrap().to_owned();
    assert!(line.contains("pass (non-vacuous)"), "{line}");
}

const SMALL: &str = "n_list = 16, 32\nreplicates = 8\nm = 2\nt_mult = 6\nseed = 4\n";

#[test]
fn experiment_output_does_not_depend_on_jobs() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("c.cfg"), SMALL).unwrap();
    for (jobs, out) in [("1", "j1"), ("3", "j3")] {
        let o = nbrw(&["experiment", "--config", "c.cfg", "--jobs", jobs, "--out", out], d.path());
        assert_eq!(code(&o), 0, "{}", text(&o));
    }
    for f in ["records.jsonl", "summary.csv"] {
        assert_eq!(fs::read(d.path().join("j1").join(f)).unwrap(), fs::read(d.path().join("j3").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn infeasible_experiments_are_refused_before_running() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("zero.cfg"), "replicates = 0\n").unwrap();
    assert_eq!(code(&nbrw(&["experiment", "--config", "zero.cfg", "--out", "o"], d.path())), 1);
    fs::write(d.path().join("huge.cfg"), "n_list = 1073741824\nreplicates = 1\n").unwrap();
    let o = nbrw(&["experiment", "--config", "huge.cfg", "--out", "o2"], d.path());
    assert_eq!(code(&o), 3, "{}", text(&o));
    assert!(!d.path().join("o2/records.jsonl").exists());
}

#[test]
fn report_tables_are_deterministic_and_histograms_add_up() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("c.cfg"), SMALL).unwrap();
    assert_eq!(code(&nbrw(&["experiment", "--config", "c.cfg", "--out", "e"], d.path())), 0);
    for out in ["r1", "r2"] {
        assert_eq!(code(&nbrw(&["report", "--summary", "e/summary.csv", "--out", out], d.path())), 0);
    }
    for f in ["coalescence_hist.csv", "t_hist.csv", "l_frac_vs_r.csv", "p_diam_vs_r.csv"] {
        assert_eq!(fs::read(d.path().join("r1").join(f)).unwrap(), fs::read(d.path().join("r2").join(f)).unwrap());
    }
    let mut rdr = csv::Reader::from_path(d.path().join("r1/coalescence_hist.csv")).unwrap();
    let mut totals = std::collections::BTreeMap::<u64, (u64, u64)>::new();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let e = totals.entry(rec[0].parse().unwrap()).or_default();
        e.0 += rec[3].parse::<u64>().unwrap();
        e.1 = rec[4].parse().unwrap();
    }
    assert_eq!(totals.len(), 2);
    for (hits, count) in totals.values() {
        assert_eq!(hits, count);
    }
}

#[test]
fn report_of_an_empty_summary_has_headers_only() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("s.csv"), "# schema=nbrw-summary version=1\nn,t,statistic,estimate,se,hits,count\n").unwrap();
    assert_eq!(code(&nbrw(&["report", "--summary", "s.csv", "--out", "r"], d.path())), 0);
    assert_eq!(fs::read_to_string(d.path().join("r/l_frac_vs_r.csv")).unwrap(), "n,r,estimate,se,count\n");
    fs::write(d.path().join("old.csv"), "# schema=nbrw-summary version=0\n").unwrap();
    let o = nbrw(&["report", "--summary", "old.csv", "--out", "r"], d.path());
    assert_eq!(code(&o), 1);
    assert!(text(&o).contains("version=1") && text(&o).contains("version=0"), "{}", text(&o));
}

#[test]
fn bounds_commands_report_json() {
    let d = tempfile::tempdir().unwrap();
    let o = nbrw(&["bounds", "identity", "--v", "1", "--k1", "1", "--k2", "2", "--samples", "20000"], d.path());
    assert_eq!(code(&o), 0, "{}", text(&o));
    let o = nbrw(&["bounds", "truncated", "--m", "2", "--r", "0.1", "--lambda", "0.6", "--n", "1024", "--samples", "20000"], d.path());
    assert_eq!(code(&o), 0, "{}", text(&o));
    assert!(text(&o).contains("\"verdict\":\"pass\""));
}
