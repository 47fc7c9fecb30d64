use std::path::Path;
use std::process::{Command, Output};

use iqpsdp::report::{SolveRecord, SOLVE_SCHEMA};

fn iqpsdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iqpsdp")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

// min -x^2 over {-1,0,1}: optimum -1.
const CONCAVE: &str = "iqp/1\nn 1\ndomain -1 1\nq -1\nl 0\nc 0\n";
const INFEASIBLE: &str = "iqp/1\nn 1\ndomain -3 3\nq 1\nl 0\nc 0\nlin 1 <= -1\nlin -1 <= -1\n";

#[test]
fn solve_json_record() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "a.iqp", CONCAVE);
    let out = iqpsdp(&["solve", &f, "--json", "--seed", "9"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rec: SolveRecord = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rec.schema, SOLVE_SCHEMA);
    assert_eq!(rec.status, "optimal");
    assert_eq!(rec.mode, "cd2d");
    assert_eq!(rec.seed, 9);
    assert!((rec.objective.unwrap() + 1.0).abs() < 1e-9);
    assert_eq!(rec.x.as_ref().unwrap()[0].abs(), 1);
    assert!(rec.root_bound.unwrap() <= -1.0 + 1e-6);
}

#[test]
fn solve_text_output_and_cd_mode() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "a.iqp", CONCAVE);
    let out = iqpsdp(&["solve", &f, "--mode", "cd"]);
    assert_eq!(out.status.code(), Some(0));
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.contains("status      optimal"), "{s}");
}

#[test]
fn infeasible_exits_zero_with_null_objective() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "inf.iqp", INFEASIBLE);
    let out = iqpsdp(&["solve", &f, "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "infeasible");
    assert!(v["objective"].is_null());
    assert!(v["x"].is_null());
}

#[test]
fn node_limit_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let gen = iqpsdp(&["generate", "--n", "12", "--p", "100", "--out", &dir.path().display().to_string()]);
    assert_eq!(gen.status.code(), Some(0));
    let file = String::from_utf8(gen.stdout).unwrap().trim().to_string();
    let out = iqpsdp(&["solve", &file, "--node-limit", "1", "--json"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
    let rec: SolveRecord = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rec.status, "node_limit");
    assert_eq!(rec.nodes, 1);
}

#[test]
fn errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.iqp").display().to_string();
    let out = iqpsdp(&["solve", &missing]);
    assert_eq!(out.status.code(), Some(1));

    let bad = write(dir.path(), "bad.iqp", "iqp/1\nn 1\ndomain -1 x\n");
    let out = iqpsdp(&["solve", &bad]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3, column 11"), "{err}");

    assert_eq!(iqpsdp(&["solve", &bad, "--mode", "nope"]).status.code(), Some(1));
    assert_eq!(iqpsdp(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(iqpsdp(&["--help"]).status.code(), Some(0));
}

#[test]
fn generate_writes_named_files_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().display().to_string();
    let out = iqpsdp(&["generate", "--family", "sparse", "--n", "5", "--p", "40", "--count", "3", "--seed", "4", "--out", &d]);
    assert_eq!(out.status.code(), Some(0));
    for k in 0..3 {
        let p = dir.path().join(format!("sparse-n5-p40-{k}.iqp"));
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("iqp/1\n# family sparse p 40 seed "), "{text}");
        assert_eq!(iqpsdp::format::parse(&text).unwrap().n(), 5);
    }
    // Same seed, same files.
    let again = tempfile::tempdir().unwrap();
    iqpsdp(&["generate", "--family", "sparse", "--n", "5", "--p", "40", "--count", "3", "--seed", "4", "--out", &again.path().display().to_string()]);
    let a = std::fs::read(dir.path().join("sparse-n5-p40-2.iqp")).unwrap();
    let b = std::fs::read(again.path().join("sparse-n5-p40-2.iqp")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn bench_prints_table_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let out = iqpsdp(&["bench", "--n", "3,4", "--p", "0,100", "--count", "2", "--csv", &csv.display().to_string()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.lines().next().unwrap().starts_with("family"));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], iqpsdp::bench::CSV_HEADER);
    // 2 n x 2 p x 2 modes, then 2 n x 2 modes summary rows
    assert_eq!(lines.len(), 1 + 8 + 4);
    for l in &lines[1..] {
        let want = if l.contains(",all,") { "4" } else { "2" };
        assert_eq!(l.split(',').nth(4), Some(want), "{text}");
    }
    assert_eq!(lines.iter().filter(|l| l.contains(",all,")).count(), 4);
}
