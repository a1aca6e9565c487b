//! End-to-end tests of the `wavebound` binary: exit-status contract,
//! deterministic report bytes, config-file merging, and output shapes.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wavebound"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn verify_lemma1_passes_and_is_byte_deterministic() {
    let args = ["verify-lemma1", "--u-max", "50", "--samples", "200"];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success(), "expected exit 0");
    assert_eq!(first.stdout, second.stdout, "reports must be byte-identical");

    let report = stdout_json(&first);
    assert_eq!(report["analytic_C"], 0.625);
    assert_eq!(report["pass"], true);
    assert_eq!(report["seed"], 1);
    assert_eq!(report["samples"], 200);
    let sup = report["measured_sup"].as_f64().unwrap();
    assert!(sup > 0.0 && sup < 0.625);
}

#[test]
fn hypothesis_violations_exit_with_code_2() {
    let out = run(&["verify-lemma1", "--p", "2", "--u-max", "20"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("requires p > 2"), "stderr: {err}");

    let out = run(&["iterate", "--kind", "semilinear", "--p", "2.2", "--u-max", "20"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("requires p > 1+sqrt(2)"), "stderr: {err}");

    let out = run(&["iterate", "--u-max", "20"]);
    assert_eq!(out.status.code(), Some(2), "missing --kind is a config error");
}

#[test]
fn lemma2_bound_violation_exits_with_code_1() {
    // small domain: the weighted sup has not yet climbed past the printed
    // constant, so the check passes
    let out = run(&["verify-lemma2", "--u-max", "5", "--samples", "100"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["pass"], true);

    // larger domain: the sup keeps growing and crosses it
    let out = run(&["verify-lemma2", "--u-max", "50", "--samples", "100"]);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert_eq!(report["pass"], false);
    let sup = report["measured_sup"].as_f64().unwrap();
    let c = report["analytic_C"].as_f64().unwrap();
    assert!(sup > c, "sup {sup} should exceed analytic constant {c}");
}

#[test]
fn config_file_merges_under_explicit_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "p = 3.0\nq = 2.5\nu_max = 30.0\nsamples = 150\n").unwrap();

    // --q overrides the file; samples and u_max come from the file
    let out = run(&[
        "verify-lemma1",
        "--config",
        cfg.to_str().unwrap(),
        "--q",
        "2.0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["samples"], 150);
    // nu = q - 1 with the flag's q = 2, not the file's 2.5
    assert_eq!(report["exponents"]["b"], 1.0);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "bogus_key = 1\n").unwrap();
    let out = run(&["verify-lemma1", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_key"));
}

#[test]
fn report_file_is_written_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run(&[
        "verify-lemma1",
        "--u-max",
        "30",
        "--samples",
        "100",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty(), "report goes to the file, not stdout");
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    // no leftover temp file
    assert!(!Path::new(&format!("{}.tmp", path.display())).exists());
}

#[test]
fn compare_neg_modulation_saturates_the_margin() {
    let out = run(&[
        "compare",
        "--modulation",
        "neg",
        "--points",
        "6",
        "--t-max",
        "4",
        "--x-max",
        "2",
        "--samples",
        "128",
        "--u-max",
        "8",
        "--tol",
        "1e-3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["pass"], true);
    assert_eq!(report["seed"], 1);
    // -G solves to -phi_G exactly, so each margin collapses to ~tol
    for point in report["points"].as_array().unwrap() {
        let margin = point["margin"].as_f64().unwrap();
        assert!(margin > 0.0 && margin < 2e-3, "margin {margin}");
    }
}

#[test]
fn plot_data_csv_has_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let plot = dir.path().join("plot.csv");
    let out = run(&[
        "verify-lemma1",
        "--u-max",
        "20",
        "--samples",
        "50",
        "--plot-data",
        plot.to_str().unwrap(),
        "--out",
        dir.path().join("r.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&plot).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,r,phi,weighted_phi"));
    let mut rows = 0;
    for line in lines {
        assert_eq!(line.split(',').count(), 4, "row: {line}");
        for cell in line.split(',') {
            cell.parse::<f64>().expect("numeric cell");
        }
        rows += 1;
    }
    assert!(rows > 100, "expected a real grid dump, got {rows} rows");
}

#[test]
fn iterate_emits_a_csv_trace() {
    let out = run(&[
        "iterate",
        "--kind",
        "potential",
        "--u-max",
        "50",
        "--steps",
        "3",
        "--samples",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,C_n,diff_norm,ratio");
    assert_eq!(lines.len(), 5, "header + seed + 3 steps");
    assert!(lines[1].starts_with("0,"));
    assert!(lines[1].ends_with(",,"), "seed row has no diff or ratio");
    assert!(lines[4].starts_with("3,"));
}
