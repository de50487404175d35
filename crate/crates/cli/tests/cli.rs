use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn mpower() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mpower"));
    cmd.env_remove("MPOWER_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    mpower().args(args).output().expect("binary runs")
}

fn write_lines(dir: &Path, name: &str, values: impl IntoIterator<Item = f64>) -> PathBuf {
    let path = dir.join(name);
    let text: String = values.into_iter().map(|v| format!("{v}\n")).collect();
    fs::write(&path, text).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn trace_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect()
}

const PLAN: &str = r#"{
  "schema": "mpower/1",
  "model": { "family": "pareto_log", "theta": 2.0 },
  "n_grid": [100, 10000],
  "replicates": 300,
  "experiment": { "kind": "consistency" }
}"#;

#[test]
fn estimate_final_value() {
    let dir = TempDir::new().unwrap();
    let data = write_lines(dir.path(), "d.txt", (0..100).map(|i| if i == 37 { -10.0 } else { 1.5 }));
    let out = dir.path().join("out");
    let o = run(&["estimate", data.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("theta_hat = 2 (n = 100)"), "{}", stdout(&o));
    let rows = trace_rows(&out.join("trace.csv"));
    let last = rows.last().unwrap();
    assert_eq!(&last[0], "100");
    assert_eq!(last[2].parse::<f64>().unwrap(), 2.0);
    assert_eq!(&last[3], "false");
}

#[test]
fn estimate_floor_everywhere() {
    let dir = TempDir::new().unwrap();
    let data = write_lines(dir.path(), "d.txt", (0..50).map(|i| (i as f64 / 20.0) - 1.0));
    let o = run(&["estimate", data.to_str().unwrap(), "--grid", "1,5,50"]);
    assert!(o.status.success());
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let headers = r.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        ["n", "log_max", "theta_hat", "floor_active"]
    );
    let rows: Vec<_> = r.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| &r[3] == "true"));
}

#[test]
fn estimate_errors() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "1\n2\nthree\n").unwrap();
    let o = run(&["estimate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    assert_eq!(run(&["estimate", empty.to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(run(&["estimate"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn sampled_file_estimate_in_exact_band() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("pareto.txt");
    let o = run(&[
        "sample",
        "--model",
        r#"{"family": "pareto_log", "theta": 1.0}"#,
        "--n",
        "100000",
        "--seed",
        "31",
        "--out",
        data.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let out = dir.path().join("est");
    assert!(
        run(&["estimate", data.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .status
            .success()
    );
    let theta: f64 = trace_rows(&out.join("trace.csv")).last().unwrap()[2].parse().unwrap();
    // Exact 1% and 99% quantiles of theta_hat at n = 1e5: ln n / ln q where
    // q solves (1 - 1/q)^n = p.
    let n = 1e5f64;
    let band = |p: f64| n.ln() / (1.0 / -(p.ln() / n).exp_m1()).ln();
    assert!((band(0.99)..=band(0.01)).contains(&theta), "theta_hat = {theta}");
}

#[test]
fn hypothesis_reports() {
    let dir = TempDir::new().unwrap();
    let n = 10_000usize;
    let big = (1e4f64.ln() / 3.0).exp();
    let data = write_lines(dir.path(), "three.txt", (0..n).map(|i| if i == 0 { big } else { 1.0 }));
    let o = run(&["test", data.to_str().unwrap(), "--theta0", "2"]);
    assert!(o.status.success());
    let r = json(&o);
    let p = r["p_value"].as_f64().unwrap();
    assert!((p / 4.39e-10 - 1.0).abs() < 0.01, "p = {p}");
    assert_eq!(r["decision"], "reject_h0");
    assert_eq!(r["branch"], "above");

    let o = run(&["test", data.to_str().unwrap(), "--theta0", "3"]);
    let r = json(&o);
    assert_eq!(r["branch"], "boundary");
    assert_eq!(r["p_value_kind"], "indeterminate");
    assert!(r["p_value"].is_null());

    let o = run(&[
        "test",
        data.to_str().unwrap(),
        "--theta0",
        "3",
        "--c",
        "1",
        "--tau",
        "-1",
    ]);
    assert_eq!(json(&o)["p_value"].as_f64(), Some(1.0));

    let big = (1e4f64.ln() / 2.0).exp();
    let data = write_lines(dir.path(), "two.txt", (0..n).map(|i| if i == 0 { big } else { 1.0 }));
    let out = dir.path().join("report");
    let o = run(&[
        "test",
        data.to_str().unwrap(),
        "--theta0",
        "3",
        "--alpha",
        "0.05",
        "--out",
        out.to_str().unwrap(),
    ]);
    let r = json(&o);
    assert!((r["p_value"].as_f64().unwrap() - 0.99).abs() < 1e-9);
    assert_eq!(r["decision"], "fail_to_reject");
    let saved: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("test_report.json")).unwrap()).unwrap();
    assert_eq!(saved, r);

    assert_eq!(
        run(&["test", data.to_str().unwrap(), "--theta0", "-1"]).status.code(),
        Some(2)
    );
}

#[test]
fn experiment_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let plan = dir.path().join("plan.json");
    fs::write(&plan, PLAN).unwrap();
    let read = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = run(&[
            "experiment",
            "--plan",
            plan.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (
            fs::read(out.join("report.json")).unwrap(),
            fs::read(out.join("report.csv")).unwrap(),
        )
    };
    let a = read("a", "1");
    assert_eq!(read("b", "1"), a);
    assert_eq!(read("c", "4"), a);

    let report: serde_json::Value = serde_json::from_slice(&a.0).unwrap();
    assert_eq!(report["schema"], "mpower/1");
    let mut csv = csv::Reader::from_reader(a.1.as_slice());
    assert_eq!(
        csv.headers().unwrap().iter().collect::<Vec<_>>(),
        ["schema", "n", "statistic", "value"]
    );
    let rows: Vec<_> = csv.records().map(|r| r.unwrap()).collect();
    assert!(rows.iter().all(|r| &r[0] == "mpower/1" && r[3].parse::<f64>().is_ok()));
    assert!(rows.iter().any(|r| &r[1] == "10000" && &r[2] == "exact_median"));
}

#[test]
fn experiment_seed_sources() {
    let dir = TempDir::new().unwrap();
    let plan = dir.path().join("plan.json");
    fs::write(&plan, PLAN).unwrap();
    let report = |name: &str, seed_flag: Option<&str>, env: Option<&str>| {
        let out = dir.path().join(name);
        let mut cmd = mpower();
        cmd.args([
            "experiment",
            "--plan",
            plan.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        if let Some(s) = seed_flag {
            cmd.args(["--seed", s]);
        }
        if let Some(e) = env {
            cmd.env("MPOWER_SEED", e);
        }
        assert!(cmd.output().unwrap().status.success());
        let v: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
        v["plan"]["master_seed"].as_u64().unwrap()
    };
    assert_eq!(report("default", None, None), mpower::DEFAULT_SEED);
    assert_eq!(report("env", None, Some("17")), 17);
    assert_eq!(report("flag", Some("5"), Some("17")), 5);
}

#[test]
fn experiment_schema_violation_names_field() {
    let dir = TempDir::new().unwrap();
    let plan = dir.path().join("plan.json");
    fs::write(&plan, PLAN.replace("\"replicates\": 300", "\"replicates\": -3")).unwrap();
    let o = run(&[
        "experiment",
        "--plan",
        plan.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`replicates`"));

    fs::write(&plan, PLAN.replace("[100, 10000]", "[100, 100]")).unwrap();
    let o = run(&[
        "experiment",
        "--plan",
        plan.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`n_grid[1]`"));
}

#[test]
fn shipped_plans_parse() {
    let plans = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../plans");
    let mut count = 0;
    for entry in fs::read_dir(plans).unwrap() {
        let text = fs::read_to_string(entry.unwrap().path()).unwrap();
        mpower::ExperimentPlan::from_json(&text).unwrap();
        count += 1;
    }
    assert!(count >= 5);
}

#[test]
fn tampered_acceptance_fails() {
    let o = run(&["acceptance", "--tolerance-scale", "0"]);
    assert_eq!(o.status.code(), Some(4));
    let text = stdout(&o);
    assert_eq!(
        text.lines()
            .filter(|l| l.starts_with("PASS") || l.starts_with("FAIL"))
            .count(),
        10
    );
    assert!(String::from_utf8_lossy(&o.stderr).contains("failed criteria"));
}

#[test]
fn acceptance_report_is_byte_identical() {
    let a = run(&["acceptance", "--threads", "1"]);
    let b = run(&["acceptance", "--threads", "8"]);
    assert_eq!(a.status.code(), b.status.code());
    assert_eq!(a.stdout, b.stdout);
}
