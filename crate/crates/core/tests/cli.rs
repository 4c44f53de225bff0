use std::path::PathBuf;
use std::process::Command;

use penalty_vqe::harness::report::{cell_stats_from_rows, read_csv, read_json};
use penalty_vqe::harness::RunReport;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_penalty-vqe"))
}

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("instances").join(format!("{name}.txt"))
}

fn stdout_of(cmd: &mut Command) -> String {
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn exact_reports_optimum() {
    let out = stdout_of(bin().arg("exact").arg(bundled("toy")));
    assert_eq!(out, "optimum 4\nassignment 01\n");
    let out = stdout_of(bin().arg("exact").arg(bundled("pet2")));
    assert!(out.starts_with("optimum 87061\n"));
}

#[test]
fn exact_rejects_wrong_recorded_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "2 1 5\n3 4\n2 3\n4\n").unwrap();
    let out = bin().arg("exact").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("recorded"));
}

#[test]
fn qubit_table() {
    let out = stdout_of(bin().arg("qubits").arg(bundled("toy")).arg(bundled("pet2")));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "name,custom,slack,delta");
    assert_eq!(lines[1], "toy,2,5,3");
    assert!(lines[2].starts_with("pet2,10,"));
}

#[test]
fn shots_worked_example() {
    let out = stdout_of(bin().args(["shots", "--epsilon", "100", "--delta", "0.05", "--range", "1000", "--alpha", "0.1"]));
    assert_eq!(out, "M_fs=185 M_alpha=19\n");
}

#[test]
fn exit_codes() {
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(bin().arg("--version").output().unwrap().status.code(), Some(0));
    assert_eq!(bin().output().unwrap().status.code(), Some(1));
    assert_eq!(bin().args(["solve"]).output().unwrap().status.code(), Some(1));
    assert_eq!(bin().args(["solve", "x.txt", "--estimator", "mean"]).output().unwrap().status.code(), Some(1));
    assert_eq!(bin().args(["solve", "/no/such/file.txt"]).output().unwrap().status.code(), Some(2));
    let out = bin().arg("solve").arg(bundled("pet2")).args(["--cap", "5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}

#[test]
fn solve_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("toy.csv");
    let json_path = dir.path().join("toy.json");
    let common = ["--trials", "3", "--shots", "200", "--maxfev", "200", "--seed", "4"];
    stdout_of(bin().arg("solve").arg(bundled("toy")).args(common).arg("--out").arg(&csv_path));
    stdout_of(
        bin()
            .arg("solve")
            .arg(bundled("toy"))
            .args(common)
            .args(["--format", "json", "--out"])
            .arg(&json_path),
    );
    let rows = read_csv(std::fs::File::open(&csv_path).unwrap()).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.instance == "toy" && r.seed == 4));
    let json = read_json(std::fs::File::open(&json_path).unwrap()).unwrap();
    let from_json: Vec<_> = json.reports.iter().map(RunReport::cell_stats).collect();
    assert_eq!(cell_stats_from_rows(&rows), from_json);
}

#[test]
fn bench_skips_cells_over_the_cap() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.toml");
    std::fs::write(
        &config,
        "instances = [\"toy\", \"pet2\"]\nformulations = [\"custom\", \"slack\"]\nestimators = [\"cvar:0.25\"]\n\
         trials = 2\nshots = 100\nmaxfev = 100\ncap = 12\n",
    )
    .unwrap();
    let out = stdout_of(bin().arg("bench").arg("--config").arg(&config));
    assert!(out.contains("# skipped instance=pet2 formulation=slack"));
    assert!(out.contains("skipped_reason=qubit_cap"));
    let rows = read_csv(out.as_bytes()).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.alpha == 0.25));
}

#[test]
fn bench_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.toml");
    std::fs::write(&config, "instances = [\"toy\"]\nshotz = 10\n").unwrap();
    let out = bin().arg("bench").arg("--config").arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
