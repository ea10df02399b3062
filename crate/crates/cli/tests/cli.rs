//! Interface contracts of the `fkspline` binary: flags, CSV schemas, exit
//! codes, and the determinism guarantees of every subcommand.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fkspline"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).expect("output file exists")
}

#[test]
fn tau_writes_the_documented_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tau.csv");
    let output = run(&[
        "tau",
        "--degree",
        "0",
        "--paths",
        "300",
        "--grid-exp",
        "12",
        "--seed",
        "42",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let csv = read(&out);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "r,n_samples,m,estimate,std_error,censoring_rate"
    );
    assert_eq!(lines.count(), 4); // moments m = 1..4
    let echo = read(&dir.path().join("tau.config.json"));
    let parsed: serde_json::Value = serde_json::from_str(&echo).unwrap();
    assert_eq!(parsed["command"], "tau");
    assert_eq!(parsed["master_seed"], 42);
    assert!(parsed["library_version"].is_string());
}

#[test]
fn converge_writes_the_documented_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("conv.csv");
    let output = run(&[
        "converge",
        "--method",
        "dagger,star",
        "--sde",
        "ramp-sigma",
        "--k",
        "8,16",
        "--q",
        "1",
        "--paths",
        "10",
        "--delta",
        "0.75",
        "--degree",
        "0",
        "--grid-exp",
        "10",
        "--seed",
        "7",
        "--tau-paths",
        "200",
        "--tau-grid-exp",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let csv = read(&out);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "method,k,q,n_paths,e_q_hat,std_error,sqrt_k_times_eq,predicted_constant,ratio"
    );
    assert_eq!(lines.count(), 4); // 2 methods x 2 budgets x 1 q
}

#[test]
fn gamma_and_compare_write_their_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let gamma_out = dir.path().join("g.csv");
    let output = run(&[
        "gamma",
        "--k",
        "4,8",
        "--degree",
        "0",
        "--paths",
        "11",
        "--grid-exp",
        "10",
        "--seed",
        "3",
        "--tau-paths",
        "200",
        "--tau-grid-exp",
        "10",
        "--out",
        gamma_out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    assert!(read(&gamma_out).starts_with("k,r,n_paths,median_gamma,scaled_median\n"));

    let cmp_out = dir.path().join("c.csv");
    let output = run(&[
        "compare",
        "--method-a",
        "dagger",
        "--method-b",
        "star",
        "--sde",
        "ramp-sigma",
        "--k",
        "12",
        "--paths",
        "8",
        "--degree",
        "0",
        "--grid-exp",
        "10",
        "--seed",
        "5",
        "--tau-paths",
        "200",
        "--tau-grid-exp",
        "10",
        "--out",
        cmp_out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    assert!(read(&cmp_out)
        .starts_with("method_a,method_b,k,q,n_paths,e_q_hat_a,e_q_hat_b,ratio,predicted_ratio\n"));
}

#[test]
fn missing_out_flag_is_a_usage_error() {
    let output = run(&[
        "tau",
        "--degree",
        "0",
        "--paths",
        "100",
        "--grid-exp",
        "10",
        "--seed",
        "1",
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&output.stderr).is_empty());
}

#[test]
fn unknown_preset_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let output = run(&[
        "converge",
        "--method",
        "dagger",
        "--sde",
        "gbm",
        "--k",
        "8",
        "--paths",
        "5",
        "--degree",
        "0",
        "--grid-exp",
        "10",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("unknown SDE preset"), "stderr: {stderr}");
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let output = run(&[
        "tau",
        "--degree",
        "0",
        "--paths",
        "150",
        "--grid-exp",
        "10",
        "--seed",
        "1",
        "--out",
        "/nonexistent-dir/t.csv",
    ]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for (tag, threads) in [("a", "1"), ("b", "2"), ("c", "1")] {
        let out = dir.path().join(format!("conv-{tag}.csv"));
        let output = run(&[
            "converge",
            "--method",
            "dagger,euler",
            "--sde",
            "ou",
            "--k",
            "8,16",
            "--q",
            "1,2",
            "--paths",
            "20",
            "--degree",
            "1",
            "--grid-exp",
            "11",
            "--seed",
            "99",
            "--tau-paths",
            "150",
            "--tau-grid-exp",
            "10",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success());
        csvs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(csvs[0], csvs[1], "threads=1 vs threads=2 differ");
    assert_eq!(csvs[0], csvs[2], "rerun differs");
}
