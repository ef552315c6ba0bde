use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optimal-povm")).args(args).output().expect("spawn")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn build_file(dir: &Path, d: usize, n: usize) -> String {
    let path = dir.join(format!("povm_{d}_{n}.json"));
    let p = path.to_str().unwrap().to_string();
    let o = run(&["build", "--d", &d.to_string(), "--N", &n.to_string(), "--povm", &p]);
    assert_eq!(o.status.code(), Some(0));
    p
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|r| r.unwrap()).collect()
}

#[test]
fn build_reports_residuals() {
    let o = run(&["build", "--d", "2", "--N", "2", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let plain = json(&o);
    assert!(plain["optimality"].as_f64().unwrap() <= 1e-10);
    assert_eq!(plain["certified"], Value::Bool(true));

    let o = run(&["build", "--d", "2", "--N", "2", "--dedupe", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let deduped = json(&o);
    assert!(deduped["elements"].as_u64() <= plain["elements"].as_u64());
    assert!(deduped["optimality"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn build_guard_and_input_errors() {
    assert_eq!(run(&["build", "--d", "2", "--N", "50"]).status.code(), Some(3));
    assert_eq!(run(&["build", "--d", "1", "--N", "2"]).status.code(), Some(2));
    assert_eq!(run(&["build", "--d", "two", "--N", "2"]).status.code(), Some(2));
    assert_eq!(run(&["moments", "--d", "2", "--i", "3", "--j", "3"]).status.code(), Some(2));
}

#[test]
fn verify_levels_and_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let p = build_file(dir.path(), 2, 1);
    assert_eq!(run(&["verify", &p, "--level", "optimality"]).status.code(), Some(0));

    let o = run(&["verify", &p, "--level", "universality", "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let r = json(&o);
    assert!(r["checks"][0]["residual"].as_f64().unwrap() > 1e-6);

    let restricted_src = build_file(dir.path(), 2, 3);
    assert_eq!(run(&["verify", &restricted_src, "--level", "all"]).status.code(), Some(1));

    let text = std::fs::read_to_string(&p).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    let w = v["elements"][0]["w"].as_str().unwrap().to_string();
    v["elements"][0]["w"] = Value::String(format!("-{w}"));
    let bad = dir.path().join("tampered.json");
    std::fs::write(&bad, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    let o = run(&["verify", bad.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    assert!(!o.stderr.is_empty());
}

#[test]
fn fidelity_sweep_matches_optimum() {
    let o = run(&["fidelity", "--sweep", "--d", "2", "--N", "1,2,3,4", "--samples", "20000", "--seed", "5", "--csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("d,N,analytic,mc_estimate,stderr,optimal"));
    let rows = csv_rows(&text);
    let want = ["2/3", "3/4", "4/5", "5/6"];
    for (row, w) in rows.iter().zip(want) {
        assert_eq!(&row[5], w);
        let (p, q) = w.split_once('/').unwrap();
        let target = p.parse::<f64>().unwrap() / q.parse::<f64>().unwrap();
        let analytic: f64 = row[2].parse().unwrap();
        let mc: f64 = row[3].parse().unwrap();
        let se: f64 = row[4].parse().unwrap();
        assert!((analytic - target).abs() < 1e-12);
        assert!((mc - analytic).abs() <= 3.0 * se);
    }

    let o = run(&["fidelity", "--sweep", "--d", "3", "--N", "1,2", "--samples", "0", "--csv"]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(&rows[0][5], "1/2");
    assert_eq!(&rows[1][5], "3/5");
    assert!((rows[1][2].parse::<f64>().unwrap() - 0.6).abs() < 1e-12);
}

#[test]
fn stochastic_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |out: &Path, threads: &str| {
        run(&["--threads", threads, "fidelity", "--sweep", "--d", "2", "--N", "2", "--samples", "5000", "--seed", "9", "--csv",
              "--out", out.to_str().unwrap()])
    };
    assert_eq!(args(&a, "1").status.code(), Some(0));
    assert_eq!(args(&b, "4").status.code(), Some(0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(run(&["fidelity", "--sweep", "--samples", "100"]).status.code() == Some(2));
}

#[test]
fn simulate_counts() {
    let dir = tempfile::tempdir().unwrap();
    let p = build_file(dir.path(), 2, 2);
    let sim = |shots: &str| json(&run(&["simulate", &p, "--state", "haar:4", "--shots", shots, "--seed", "3", "--json"]));
    let a = sim("100000");
    let b = sim("100000");
    assert_eq!(a, b);
    let total: u64 = a["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(total, 100_000);
    let small = sim("100");
    assert!(a["tv_distance"].as_f64() < small["tv_distance"].as_f64());

    let o = run(&["simulate", &p, "--state", "0.6,0;0,0.8", "--shots", "10", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(run(&["simulate", &p, "--state", "1,0", "--shots", "10", "--seed", "1"]).status.code(), Some(2));
}

#[test]
fn clone_table() {
    let o = run(&["clone", "--d", "2", "--N", "1", "--M", "1,2,3", "--states", "3", "--seed", "2", "--csv"]);
    assert_eq!(o.status.code(), Some(0));
    for row in csv_rows(&stdout(&o)) {
        let m: usize = row[2].parse().unwrap();
        let single: f64 = row[4].parse().unwrap();
        let two: f64 = row[5].parse().unwrap();
        match m {
            1 => assert!((single - 1.0).abs() < 1e-12),
            2 => assert!((single - 5.0 / 6.0).abs() < 1e-10),
            _ => {}
        }
        if m > 1 {
            assert!((two - 2.0 / 3.0).abs() < 1e-8);
        }
    }
}

#[test]
fn moments_print_fractions() {
    let o = run(&["moments", "--d", "2", "--i", "1,1", "--j", "1,1"]);
    assert!(stdout(&o).trim_end().ends_with("1/3"));
    let o = run(&["moments", "--d", "3", "--i", "1,2", "--j", "2,1", "--json"]);
    assert_eq!(json(&o)[0]["value"], Value::String("1/12".into()));
    let o = run(&["moments", "--d", "2", "--all", "1", "--json"]);
    assert_eq!(json(&o).as_array().unwrap().len(), 4);
}
