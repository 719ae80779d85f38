use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qsched(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsched"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap()
}

fn config(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn solve_writes_a_policy() {
    let dir = tempfile::tempdir().unwrap();
    let pol = dir.path().join("p.toml");
    let o = qsched(&["solve", &config("small.json"), "-o", pol.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&pol).unwrap();
    assert!(text.starts_with("# qsched "));
    assert!(text.contains("# timestamp: 1700000000"));
    assert!(text.contains("thresholds = ["));
    assert!(stdout(&o).contains("delay "));
}

#[test]
fn generous_budget_transmits_always() {
    let o = qsched(&["solve", &config("small.json"), "--budget", "100"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("thresholds 1 1\n"), "{}", stdout(&o));
}

#[test]
fn infeasible_budget_exits_2() {
    let o = qsched(&["solve", &config("small.json"), "--budget", "0.01"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error:"));
}

#[test]
fn missing_budget_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "c.json", r#"{"theta":[0.7,0.3],"eta":[1.0],"power":[1.0],"K":4}"#);
    assert_eq!(qsched(&["solve", &c]).status.code(), Some(1));
}

#[test]
fn malformed_config_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "bad.json", "{\n  \"theta\": [0.7, 0.3],\n  \"eta\": [1.0,,]\n}");
    let o = qsched(&["solve", &c, "--budget", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn buffer_smaller_than_batch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "k.json", r#"{"theta":[0.7,0.2,0.1],"eta":[1.0],"power":[1.0],"K":1}"#);
    let o = qsched(&["solve", &c, "--budget", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("K"), "{}", stderr(&o));
}

#[test]
fn unknown_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "u.json", r#"{"theta":[0.7,0.3],"eta":[1.0],"power":[1.0],"buffer":4}"#);
    assert_eq!(qsched(&["solve", &c, "--budget", "1"]).status.code(), Some(1));
}

#[test]
fn sweep_csv_columns_and_monotone_delay() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let o = qsched(&["sweep", &config("small.json"), "--auto", "15", "-o", out.to_str().unwrap(), "--gnuplot"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut rows = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(rows.next().unwrap(), "budget,power_used,delay,K_1,K_2,frac_1,frac_2");
    let delays: Vec<f64> = rows.map(|r| r.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(delays.len() >= 14);
    assert!(delays.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    let gp = std::fs::read_to_string(format!("{}.gp", out.display())).unwrap();
    assert!(gp.contains(out.to_str().unwrap()));
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let args = ["sweep", &config("small.json"), "--budgets", "0.5,0.6,0.8,1.0"];
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let mut v: Vec<&str> = args.to_vec();
        v.extend(["-o", p.to_str().unwrap()]);
        assert_eq!(qsched(&v).status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn unsorted_budgets_are_rejected() {
    let o = qsched(&["sweep", &config("small.json"), "--budgets", "1.0,0.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_compares_theory_and_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let pol = dir.path().join("p.toml");
    let pol = pol.to_str().unwrap();
    assert_eq!(qsched(&["solve", &config("small.json"), "-o", pol]).status.code(), Some(0));
    let o = qsched(&["simulate", &config("small.json"), pol, "--slots", "100000", "--seed", "4", "--sojourn"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    for key in ["theory", "empirical", "rel_error", "delay", "power", "sojourn"] {
        assert!(s.contains(key), "{key} missing from\n{s}");
    }
}

#[test]
fn simulate_rejects_mismatched_policy() {
    let dir = tempfile::tempdir().unwrap();
    let pol = dir.path().join("p.toml");
    let pol = pol.to_str().unwrap();
    qsched(&["solve", &config("tableI_rate030.json"), "--budget", "0.1", "-o", pol]);
    let o = qsched(&["simulate", &config("small.json"), pol, "--slots", "1000"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_passes_and_detects_tampering() {
    let o = qsched(&["verify", "--policies", "50"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
    let o = qsched(&["verify", "--policies", "50", "--tamper-g", "2"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn bad_arguments_exit_1() {
    assert_eq!(qsched(&["solve"]).status.code(), Some(1));
    assert_eq!(qsched(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(qsched(&["sweep", "missing.json"]).status.code(), Some(1));
}
