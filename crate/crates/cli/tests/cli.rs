use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const FIG_KNAPSACK: &str = "csp 4\ndom 0 1 2\ndom 0 1 3\ndom 0 1 2\ndom 1 2\nknapsack 5 8 3*0 1*1 2*2 1*3\n";
const LATIN4: &str = "4\n1 2 3 4\n2 1 4 3\n3 4 1 2\n4 3 2 1\n";
const LATIN4_HOLES: &str = "4\n1 0 3 4\n2 1 0 3\n0 4 1 2\n4 3 2 0\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_countsearch"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn put(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn filled_latin_square_needs_no_backtracks() {
    let dir = TempDir::new().unwrap();
    let f = put(&dir, "full.qwh", LATIN4);
    let o = run(&["solve", s(&f)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("status: sat"));
    assert!(out.contains("backtracks: 0"));
}

#[test]
fn solution_flag_prints_values() {
    let dir = TempDir::new().unwrap();
    let f = put(&dir, "holes.qwh", LATIN4_HOLES);
    let o = run(&["solve", s(&f), "--solution"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("solution: 1 2 3 4 2 1 4 3 3 4 1 2 4 3 2 1"), "{}", stdout(&o));
}

#[test]
fn zero_timeout_exits_with_timeout_code() {
    let dir = TempDir::new().unwrap();
    let f = put(&dir, "holes.qwh", LATIN4_HOLES);
    let o = run(&["solve", s(&f), "--timeout", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("status: timeout"));
}

#[test]
fn unsatisfiable_instance_exits_one() {
    let dir = TempDir::new().unwrap();
    let f = put(&dir, "pigeon.csp", "csp 3\ndom 1 2\ndom 1 2\ndom 1 2\nalldifferent 0 1 2\n");
    let o = run(&["solve", s(&f)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("status: unsat"));
}

#[test]
fn max_density_picks_x4_first() {
    let dir = TempDir::new().unwrap();
    let f = put(&dir, "fig.csp", FIG_KNAPSACK);
    let o = run(&["solve", s(&f), "--heuristic", "maxSD"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("first decision: x4=1"), "{}", stdout(&o));
}

#[test]
fn exact_densities_are_printed_as_fractions() {
    let dir = TempDir::new().unwrap();
    let f = put(&dir, "fig.csp", FIG_KNAPSACK);
    let o = run(&["densities", s(&f), "--exact"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("count 22.000000 (exact)"), "{out}");
    assert!(out.contains("oracle count 22"));
    assert!(out.contains("1=0.454545[5/11]"));
    assert!(out.contains("rank correlation 1.0000"));
}

#[test]
fn oracle_refuses_large_products() {
    let dir = TempDir::new().unwrap();
    let f = put(&dir, "fig.csp", FIG_KNAPSACK);
    let o = run(&["densities", s(&f), "--exact", "--cap", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("oracle refused"));
}

#[test]
fn model_without_constraints_dumps_nothing() {
    let dir = TempDir::new().unwrap();
    let f = put(&dir, "empty.csp", "csp 2\ndom 1 2\ndom 3\n");
    let o = run(&["densities", s(&f)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).contains("constraint"));
}

#[test]
fn unknown_heuristic_lists_the_choices() {
    let dir = TempDir::new().unwrap();
    let f = put(&dir, "full.qwh", LATIN4);
    let o = run(&["solve", s(&f), "--heuristic", "bogus"]);
    let code = o.status.code().unwrap();
    assert!(code > 2, "exit {code}");
    let err = stderr(&o);
    assert!(err.contains("maxSD") && err.contains("domWDeg"), "{err}");
}

#[test]
fn malformed_file_reports_the_line() {
    let dir = TempDir::new().unwrap();
    let f = put(&dir, "bad.qwh", "3\n1 2 3\n2 x 1\n3 1 2\n");
    let o = run(&["solve", s(&f)]);
    assert!(o.status.code().unwrap() > 2);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

fn csv_rows(out: &str) -> Vec<String> {
    out.lines().skip(1).map(str::to_owned).collect()
}

fn without_time(row: &str) -> String {
    row.split(',').enumerate().filter(|&(i, _)| i != 7).map(|(_, f)| f).collect::<Vec<_>>().join(",")
}

#[test]
fn bench_writes_one_row_per_run() {
    let dir = TempDir::new().unwrap();
    let f = put(&dir, "holes.qwh", LATIN4_HOLES);
    let o = run(&["bench", s(&f), "--heuristic", "maxSD", "--seeds", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(
        out.lines().next().unwrap(),
        "instance,heuristic,traversal,params,seed,status,backtracks,time_ms,restarts"
    );
    assert_eq!(csv_rows(&out).len(), 1);
}

#[test]
fn restart_sweep_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let f = put(&dir, "holes.qwh", LATIN4_HOLES);
    let args = ["bench", s(&f), "--heuristic", "maxSD", "--traversal", "restart", "--seeds", "0..10", "--jobs", "4"];
    let a = csv_rows(&stdout(&run(&args)));
    let b = csv_rows(&stdout(&run(&args)));
    assert_eq!(a.len(), 10);
    let strip = |rows: &[String]| rows.iter().map(|r| without_time(r)).collect::<Vec<_>>();
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn bench_writes_csv_and_curves_files() {
    let dir = TempDir::new().unwrap();
    let f = put(&dir, "holes.qwh", LATIN4_HOLES);
    let csv = dir.path().join("runs.csv");
    let curves = dir.path().join("curves.csv");
    let o = run(&[
        "bench",
        s(&f),
        "--heuristic",
        "maxSD,dom",
        "--seeds",
        "1,2",
        "--out",
        s(&csv),
        "--curves",
        s(&curves),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let runs = std::fs::read_to_string(&csv).unwrap();
    assert!(runs.lines().count() >= 3);
    let cur = std::fs::read_to_string(&curves).unwrap();
    assert!(cur.starts_with("heuristic,traversal,params,measure,value,solved,runs"));
    assert!(stderr(&o).contains("solved"));
}

#[test]
fn generated_files_load_back() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("gen");
    let o = run(&["generate", "qwh", "--out", s(&out), "--count", "2", "--n", "5", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let paths: Vec<String> = stdout(&o).lines().map(str::to_owned).collect();
    assert_eq!(paths.len(), 2);
    for p in &paths {
        let solved = run(&["solve", p]);
        assert_eq!(solved.status.code(), Some(0));
    }
    let swept = run(&["bench", s(&out), "--seeds", "0"]);
    assert_eq!(csv_rows(&stdout(&swept)).len(), 2);
}
