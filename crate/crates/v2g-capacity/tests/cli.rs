//! Integration tests of the `v2gcap` binary and its file outputs.

use std::path::Path;
use std::process::Command;

const SCENARIO: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/reference.cfg");

const SUMMARY_HEADER: &str = "param_name,param_value,l1_ana,l2_ana,l3_ana,c_rd_ana,c_ru_ana,\
                              c_rd_sim,c_ru_sim,err_rd,err_ru,ci_rd,ci_ru";
const TRACE_HEADER: &str = "time_min,n1,n2,n3,psi1,psi2,psi3,c_rd_kw,c_ru_kw";

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_v2gcap"))
        .args(args)
        .output()
        .expect("failed to launch v2gcap")
}

fn quick_args<'a>(out: &'a str) -> Vec<&'a str> {
    vec![
        "--scenario",
        SCENARIO,
        "--seed",
        "3",
        "--horizon",
        "200",
        "--warmup",
        "50",
        "--replications",
        "2",
        "--out",
        out,
    ]
}

#[test]
fn writes_summary_empirical_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let output = run_cli(&quick_args(out.to_str().unwrap()));
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next().unwrap(), SUMMARY_HEADER);
    let row = lines.next().unwrap();
    assert!(row.starts_with("reference,0,"), "row: {row}");
    assert_eq!(row.split(',').count(), 13);
    assert!(lines.next().is_none());

    for rep in ["trace_r000.csv", "trace_r001.csv"] {
        let trace = std::fs::read_to_string(out.join(rep)).unwrap();
        let mut lines = trace.lines();
        assert_eq!(lines.next().unwrap(), TRACE_HEADER);
        // 0..=200 sampled every minute
        assert_eq!(lines.count(), 201);
    }
    assert!(!out.join("trace_r002.csv").exists());

    let empirical = std::fs::read_to_string(out.join("empirical.csv")).unwrap();
    assert_eq!(
        empirical.lines().next().unwrap(),
        "param_name,param_value,p1_hat,p2_hat,p3_hat,q1_cfg,q1_hat,q2_cfg,q2_hat"
    );
    assert_eq!(empirical.lines().count(), 2);

    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("analytic C_RD"), "stdout: {stdout}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run_cli(&quick_args(a.to_str().unwrap())).status.success());
    assert!(run_cli(&quick_args(b.to_str().unwrap())).status.success());
    for name in ["summary.csv", "empirical.csv", "trace_r000.csv", "trace_r001.csv"] {
        let fa = std::fs::read(a.join(name)).unwrap();
        let fb = std::fs::read(b.join(name)).unwrap();
        assert_eq!(fa, fb, "{name} differs between identical invocations");
    }
}

#[test]
fn sweep_writes_rows_in_input_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let mut args = quick_args(out.to_str().unwrap());
    args.extend(["--sweep", "mu3=0.05,0.02"]);
    let output = run_cli(&args);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    let sweep = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = sweep.lines().collect();
    assert_eq!(lines[0], SUMMARY_HEADER);
    assert!(lines[1].starts_with("mu3,0.05,"), "row: {}", lines[1]);
    assert!(lines[2].starts_with("mu3,0.02,"), "row: {}", lines[2]);
    assert_eq!(lines.len(), 3);

    for sub in ["sweep_mu3_00", "sweep_mu3_01"] {
        assert!(
            out.join(sub).join("trace_r000.csv").exists(),
            "missing {sub} traces"
        );
    }
}

#[test]
fn sample_interval_controls_trace_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("coarse");
    let mut args = quick_args(out.to_str().unwrap());
    args.extend(["--sample-interval", "10"]);
    assert!(run_cli(&args).status.success());
    let trace = std::fs::read_to_string(out.join("trace_r000.csv")).unwrap();
    // header plus samples at 0, 10, ..., 200
    assert_eq!(trace.lines().count(), 22);
}

#[test]
fn missing_scenario_file_fails_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_cli(&[
        "--scenario",
        "/nonexistent/scenario.cfg",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!output.status.success());
    assert!(!String::from_utf8_lossy(&output.stderr).is_empty());
}

#[test]
fn invalid_sweep_flag_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = quick_args(dir.path().to_str().unwrap());
    args.extend(["--sweep", "mu4=0.1"]);
    let output = run_cli(&args);
    assert!(!output.status.success());
}

#[test]
fn invalid_scenario_contents_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    let text = std::fs::read_to_string(Path::new(SCENARIO))
        .unwrap()
        .replace("lambda = 5", "lambda = -1");
    std::fs::write(&bad, text).unwrap();
    let output = run_cli(&[
        "--scenario",
        bad.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert!(!output.status.success());
    assert!(
        String::from_utf8_lossy(&output.stderr).contains("lambda"),
        "stderr should mention the offending field"
    );
}
