use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;
use xree_cli::AnalysisReport;

const T1: &str = r#"{"params": {"lambda0": 0.5, "lambda3": 0.1, "lambda1": 0.25, "lambda2": 0.15, "phi": 1.5707963267948966}}"#;
const T2: &str = r#"{"params": {"lambda0": 0.55, "lambda3": 0.05, "lambda1": 0.25, "lambda2": 0.15, "phi": 1.3}}"#;
const BELL: &str = r#"{"params": {"lambda0": 1.0, "lambda3": 0.0, "lambda1": 0.0, "lambda2": 0.0, "phi": 1.5707963267948966}}"#;
const DIAGONAL: &str = r#"{"params": {"lambda0": 0.4, "lambda3": 0.3, "lambda1": 0.2, "lambda2": 0.1, "phi": 0.0}}"#;

fn xree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xree")).args(args).output().unwrap()
}

fn spec(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn analyze_t1() {
    let dir = TempDir::new().unwrap();
    let t1 = spec(&dir, "t1.json", T1);
    let o = xree(&["analyze", s(&t1)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("E_r              8.06595038766"), "{text}");
    assert!(text.contains("(certified)"));
    assert!(text.contains("closed_form"));
    assert!(text.contains("verdict          pass"));
}

#[test]
fn analyze_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let t2 = spec(&dir, "t2.json", T2);
    let a = xree(&["analyze", s(&t2), "--oracle", "--seed", "7"]);
    let b = xree(&["analyze", s(&t2), "--oracle", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn json_report_round_trips() {
    let dir = TempDir::new().unwrap();
    let t2 = spec(&dir, "t2.json", T2);
    let out = dir.path().join("report.json");
    let o = xree(&["analyze", s(&t2), "--format", "json", "--oracle", "--timing", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let r: AnalysisReport = serde_json::from_str(&text).unwrap();
    assert_eq!(r.method, "general_newton");
    assert!(r.certified());
    assert!((r.e_r - 0.004524809351141187).abs() < 1e-12);
    assert!(r.oracle.unwrap().gap.abs() < 1e-4);
    assert!(r.wall_clock.is_some());
    let again = serde_json::to_string_pretty(&r).unwrap() + "\n";
    assert_eq!(again, text);
}

#[test]
fn trace_violation_exits_2() {
    let dir = TempDir::new().unwrap();
    let bad = spec(
        &dir,
        "bad.json",
        r#"{"params": {"lambda0": 0.6, "lambda3": 0.1, "lambda1": 0.25, "lambda2": 0.15, "phi": 1.0}}"#,
    );
    let o = xree(&["analyze", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("must equal 1"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn malformed_and_missing_specs_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = spec(&dir, "bad.json", "{ not json");
    assert_eq!(xree(&["analyze", s(&bad)]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(xree(&["analyze", s(&missing)]).status.code(), Some(2));
}

#[test]
fn diagonal_state() {
    let dir = TempDir::new().unwrap();
    let d = spec(&dir, "d.json", DIAGONAL);
    let o = xree(&["analyze", s(&d), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let r: AnalysisReport = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r.e_r, 0.0);
    assert!(!r.entangled);
    assert_eq!(r.method, "separable");
}

#[test]
fn oracle_method_is_labelled_upper_bound() {
    let dir = TempDir::new().unwrap();
    let t1 = spec(&dir, "t1.json", T1);
    let o = xree(&["analyze", s(&t1), "--method", "oracle"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("(upper bound)"), "{text}");
    assert!(text.contains("not certified"));
}

#[test]
fn closed_method_on_general_angle_exits_2() {
    let dir = TempDir::new().unwrap();
    let t2 = spec(&dir, "t2.json", T2);
    assert_eq!(xree(&["analyze", s(&t2), "--method", "closed"]).status.code(), Some(2));
}

#[test]
fn tolerance_override_is_reported() {
    let dir = TempDir::new().unwrap();
    let t1 = spec(&dir, "t1.json", T1);
    let text = stdout(&xree(&["analyze", s(&t1), "--tol", "1e-9"]));
    assert!(text.contains("tolerance        1e-9"), "{text}");
}

#[test]
fn filter_and_matrix_inputs() {
    let dir = TempDir::new().unwrap();
    let f = spec(&dir, "f.json", r#"{"filter": {"a": 1.0, "b": 0.4, "c": 0.2, "d": 0.3}}"#);
    assert_eq!(xree(&["analyze", s(&f)]).status.code(), Some(0));
    let entries = "[[0.4,0],[0,0],[0,0],[0.3,0],[0,0],[0.05,0],[0,0],[0,0],[0,0],[0,0],[0.05,0],[0,0],[0.3,0],[0,0],[0,0],[0.5,0]]";
    let m = spec(&dir, "m.json", &format!(r#"{{"matrix": {entries}}}"#));
    let o = xree(&["analyze", s(&m), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let r: AnalysisReport = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r.entangled && r.certified());
}

#[test]
fn sweep_writes_deterministic_csv() {
    let dir = TempDir::new().unwrap();
    let t1 = spec(&dir, "t1.json", T1);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = xree(&["sweep", s(&t1), "--param", "phi", "--from", "0", "--to", "1.5707963267948966", "--steps", "50", "--out", s(out)]);
        assert_eq!(o.status.code(), Some(0));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap(), vec!["phi", "concurrence", "e_r", "method", "certified", "status"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 50);
    let e_r: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    for w in e_r.windows(2) {
        assert!(w[1] >= w[0] - 1e-12);
    }
    assert_eq!(&rows[0][5], "ok");
}

#[test]
fn single_step_sweep_matches_analyze() {
    let dir = TempDir::new().unwrap();
    let t2 = spec(&dir, "t2.json", T2);
    let o = xree(&["sweep", s(&t2), "--param", "phi", "--from", "1.3", "--to", "1.3", "--steps", "1", "--oracle"]);
    assert_eq!(o.status.code(), Some(0));
    let csv_text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    assert_eq!(rdr.headers().unwrap().get(5), Some("oracle_gap"));
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    let a = xree(&["analyze", s(&t2), "--format", "json", "--oracle"]);
    let r: AnalysisReport = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), r.concurrence);
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), r.e_r);
    assert_eq!(&rows[0][3], r.method);
    assert_eq!(&rows[0][4], "true");
    assert_eq!(rows[0][5].parse::<f64>().unwrap(), r.oracle.unwrap().gap);
}

#[test]
fn sweep_keeps_going_past_invalid_points() {
    let dir = TempDir::new().unwrap();
    let t1 = spec(&dir, "t1.json", T1);
    let o = xree(&["sweep", s(&t1), "--param", "lambda1", "--from", "-0.2", "--to", "0.4", "--steps", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[1].ends_with(",,,,,invalid"), "{}", lines[1]);
    assert!(lines[4].ends_with(",ok"), "{}", lines[4]);
    assert!(!o.stderr.is_empty());
}

#[test]
fn oracle_command() {
    let dir = TempDir::new().unwrap();
    for (name, text) in [("t1", T1), ("bell", BELL), ("diag", DIAGONAL)] {
        let p = spec(&dir, name, text);
        let o = xree(&["oracle", s(&p)]);
        assert_eq!(o.status.code(), Some(0), "{name}");
        let line = stdout(&o);
        let fields: Vec<&str> = line.split_whitespace().collect();
        let oracle: f64 = fields[1].parse().unwrap();
        let reference: f64 = fields[3].parse().unwrap();
        let gap: f64 = fields.last().unwrap().parse().unwrap();
        assert!(gap < 1e-4, "{line}");
        if name == "diag" {
            assert!(oracle < 1e-6 && reference < 1e-6, "{line}");
        }
    }
}
