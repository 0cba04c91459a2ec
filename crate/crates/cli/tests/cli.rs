use std::path::Path;
use std::process::{Command, Output};

const WORKED_EXAMPLE_CSV: &str = "\
user_id,timestamp,latitude,longitude
user1,2020/01/16 10:55,35.65,139.70
user1,2020/01/17 11:55,35.66,139.71
user1,2020/01/17 12:50,35.64,139.72
user2,2020/01/16 21:30,34.70,135.50
user2,2020/01/17 22:10,34.71,135.49
user2,2020/01/18 21:45,34.69,135.52
user2,2020/01/19 20:10,34.72,135.51
";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geocoherence"))
        .args(args)
        .env_remove("GEOCOHERENCE_SEED")
        .output()
        .unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn file(dir: &Path, name: &str, body: &[u8]) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn ingest_reports_users_and_samples() {
    let dir = tempfile::tempdir().unwrap();
    let a = file(dir.path(), "a.csv", WORKED_EXAMPLE_CSV.as_bytes());
    assert!(stdout(&["ingest", &a]).starts_with("2 users, 7 samples"));
    let e = file(dir.path(), "e.csv", b"user_id,timestamp,latitude,longitude\n");
    assert!(stdout(&["ingest", &e]).starts_with("0 users, 0 samples"));
}

#[test]
fn garbage_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let g = file(dir.path(), "g.csv", b"\xff\xfe not a trace\x00\x01");
    assert_eq!(run(&["ingest", &g]).status.code(), Some(2));
    let bad_row = file(dir.path(), "b.csv", format!("{WORKED_EXAMPLE_CSV}user3,yesterday,1,2\n").as_bytes());
    assert_eq!(run(&["ingest", &bad_row, "--strict"]).status.code(), Some(2));
    assert!(stdout(&["ingest", &bad_row]).contains("rejected rows: 1"));
}

#[test]
fn extract_column_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = file(dir.path(), "a.csv", WORKED_EXAMPLE_CSV.as_bytes());
    for (alpha, cols) in [("0", 7), ("6", 13)] {
        let csv = stdout(&["extract", &a, "--alpha", alpha]);
        assert_eq!(csv.lines().next().unwrap().split(',').count(), cols + 1);
        assert_eq!(csv, stdout(&["extract", &a, "--alpha", alpha]));
    }
}

#[test]
fn evaluate_defaults_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.csv");
    stdout(&["synth", "--users", "3", "--samples", "40", "-o", t.to_str().unwrap()]);
    let t = t.to_str().unwrap();
    let table = stdout(&["evaluate", t, "--algorithm", "rf", "--folds", "10"]);
    assert!(table.starts_with("k=10, trees=100, scale=10000"), "{table}");
    assert!(table.contains("rf 3-DC"));
    assert_eq!(run(&["evaluate", t, "--folds", "1"]).status.code(), Some(1));
    assert_eq!(run(&["evaluate", t, "--algorithm", "svm"]).status.code(), Some(1));
    let json = || stdout(&["evaluate", t, "--algorithm", "et", "--estimators", "5", "--folds", "3", "--seed", "9", "--format", "json"]);
    assert_eq!(json(), json());
}

#[test]
fn seed_env_var_is_a_fallback() {
    let with_env = Command::new(env!("CARGO_BIN_EXE_geocoherence"))
        .args(["synth", "--users", "2", "--samples", "5"])
        .env("GEOCOHERENCE_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(with_env.stdout, run(&["synth", "--users", "2", "--samples", "5", "--seed", "7"]).stdout);
    assert_ne!(with_env.stdout, run(&["synth", "--users", "2", "--samples", "5", "--seed", "8"]).stdout);
}

#[test]
fn threat_reproduces_pin_numbers() {
    let out = stdout(&["threat", "--forge", "1e-4", "--tries", "4", "--digits", "6", "--symbols", "10"]);
    assert!(out.contains("Pr_A = 4e-10"), "{out}");
    assert!(out.contains("Pr_A with PIN known = 1e-4 (0.01%)"), "{out}");
    let json: serde_json::Value = serde_json::from_str(&stdout(&["threat", "--forge", "1e-4", "--tries", "6", "--format", "json"])).unwrap();
    assert!((json["adversary_probability"].as_f64().unwrap() - 6e-10).abs() < 1e-22);
    assert_eq!(run(&["threat", "--forge", "1e-4", "--symbols", "10", "--digits", "30"]).status.code(), Some(2));
}

#[test]
fn threat_reads_fnr_from_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = file(
        dir.path(),
        "r.json",
        br#"{"cells":[{"algorithm":"rf","alpha":0,"metrics":{"fnr":0.5}},{"algorithm":"rf","alpha":3,"metrics":{"fnr":0.0001}}]}"#,
    );
    let out = stdout(&["threat", "--from-report", &report]);
    assert!(out.contains("Pr_forge = 1e-4 (0.01%)"), "{out}");
}

#[test]
fn stats_constant_column_has_zero_sd() {
    let dir = tempfile::tempdir().unwrap();
    let a = file(dir.path(), "a.csv", WORKED_EXAMPLE_CSV.as_bytes());
    let csv = stdout(&["stats", &a, "--alpha", "1", "--format", "csv"]);
    let month = csv.lines().find(|l| l.starts_with("month,")).unwrap();
    let fields: Vec<&str> = month.split(',').collect();
    assert_eq!(fields[5], "0", "{month}");
}

#[test]
fn help_lists_defaults() {
    let help = stdout(&["evaluate", "--help"]);
    for needle in ["--estimators", "[default: 100]", "--folds", "[default: 10]", "--scale", "[default: 10000]", "rf 3, et 4, bagging 5", "--wrap-hours", "--threads", "--strict", "GEOCOHERENCE_SEED"] {
        assert!(help.contains(needle), "missing {needle}");
    }
}
