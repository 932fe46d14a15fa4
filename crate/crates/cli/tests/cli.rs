//! End-to-end checks of the binary: parsing, exit codes, reproducible
//! reports.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mixbreak"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("mixbreak-cli-tests");
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_data(name: &str, contents: &str) -> PathBuf {
    let path = tmp(name);
    fs::write(&path, contents).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn two_group_file(name: &str) -> PathBuf {
    let nsd = run(&["nsd", "--a", "0", "--var", "1", "--n", "25"]);
    assert!(nsd.status.success());
    let base = String::from_utf8(nsd.stdout).unwrap();
    let shifted: String = base
        .lines()
        .map(|l| format!("{}\n", l.parse::<f64>().unwrap() + 5.0))
        .collect();
    write_data(name, &format!("{base}{shifted}"))
}

#[test]
fn nsd_emits_sorted_values() {
    let out = run(&["nsd", "--a", "0", "--var", "1", "--n", "25"]);
    assert!(out.status.success());
    let values: Vec<f64> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(values.len(), 25);
    assert!(values.windows(2).all(|w| w[0] < w[1]));
    assert!((values[12]).abs() < 1e-12);
}

#[test]
fn data_parsing_skips_comments_and_blank_lines() {
    let path = write_data(
        "comments.txt",
        "# header\n1.0\n\n  2.5 \n# trailing comment\n-3.25\n",
    );
    let out = run(&[
        "fit",
        "--data",
        path.to_str().unwrap(),
        "--s",
        "1",
        "--sigma0",
        "0.1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["result"]["converged"], true);
}

#[test]
fn bad_data_line_exits_2() {
    let path = write_data("bad.txt", "1.0\nnot-a-number\n");
    let out = run(&[
        "fit",
        "--data",
        path.to_str().unwrap(),
        "--s",
        "1",
        "--sigma0",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not a decimal value"), "{err}");
}

#[test]
fn missing_file_and_bad_flags_exit_2() {
    let out = run(&[
        "fit",
        "--data",
        "/nonexistent/file.txt",
        "--s",
        "1",
        "--sigma0",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let path = write_data("ok.txt", "1.0\n2.0\n");
    let out = run(&[
        "fit",
        "--data",
        path.to_str().unwrap(),
        "--s",
        "1",
        "--sigma0",
        "0.1",
        "--family",
        "gauss",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Unknown flag: the argument parser itself reports usage errors as 2.
    let out = run(&["fit", "--nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn hypothesis_violation_exits_4() {
    let path = write_data("hyp.txt", "0.0\n0.5\n1.0\n1.5\n2.0\n");
    // Noise level above f(0)/sigma0 violates the certificate hypothesis.
    let out = run(&[
        "bound",
        "--data",
        path.to_str().unwrap(),
        "--certificate",
        "improper-noise",
        "--noise",
        "improper:5.0",
        "--s",
        "2",
        "--sigma0",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn non_convergence_exits_3() {
    let path = two_group_file("noconv.txt");
    let out = run(&[
        "bound",
        "--data",
        path.to_str().unwrap(),
        "--certificate",
        "improper-noise",
        "--noise",
        "improper:0.0117",
        "--s",
        "2",
        "--sigma0",
        "0.025",
        "--max-iters",
        "1",
        "--rel-tol",
        "1e-16",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn reports_are_bit_identical_across_runs() {
    let path = two_group_file("repro.txt");
    let out_a = tmp("report_a.json");
    let out_b = tmp("report_b.json");
    for out in [&out_a, &out_b] {
        let r = run(&[
            "fit",
            "--data",
            path.to_str().unwrap(),
            "--s",
            "2",
            "--sigma0",
            "0.025",
            "--seed",
            "7",
            "--restarts",
            "8",
            "--output",
            out.to_str().unwrap(),
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let a = fs::read(&out_a).unwrap();
    let b = fs::read(&out_b).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn select_report_and_plot_data() {
    let path = two_group_file("select.txt");
    let plot = tmp("select_plot.csv");
    let out = run(&[
        "select",
        "--data",
        path.to_str().unwrap(),
        "--sigma0",
        "0.025",
        "--s-max",
        "3",
        "--restarts",
        "8",
        "--plot",
        plot.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["result"]["selected"], 2);
    assert_eq!(report["result"]["rows"].as_array().unwrap().len(), 3);

    let csv = fs::read_to_string(&plot).unwrap();
    assert!(csv.starts_with("s,loglik,k,value\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn classify_reports_labels_and_clusters() {
    let path = two_group_file("classify.txt");
    let out = run(&[
        "classify",
        "--data",
        path.to_str().unwrap(),
        "--s",
        "2",
        "--sigma0",
        "0.025",
        "--restarts",
        "8",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let labels = report["result"]["labels"].as_array().unwrap();
    assert_eq!(labels.len(), 50);
    assert!(labels[..25].iter().all(|l| l == &labels[0]));
    assert!(labels[25..].iter().all(|l| l == &labels[25]));
    assert_ne!(labels[0], labels[25]);
}

#[test]
fn bound_report_carries_certificate_rows() {
    let path = two_group_file("bound.txt");
    let out = run(&[
        "bound",
        "--data",
        path.to_str().unwrap(),
        "--certificate",
        "bic-inlier",
        "--sigma0",
        "0.025",
        "--g-max",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let result = &report["result"];
    assert_eq!(result["g_star"], 1);
    let per_g = result["per_g"].as_array().unwrap();
    assert_eq!(per_g.len(), 3);
    assert!((per_g[0]["value"].as_f64().unwrap() - 3.37).abs() < 0.2);
    assert_eq!(per_g[0]["certified"], true);
    assert_eq!(per_g[1]["certified"], false);
}

#[test]
fn csv_format_flattens_the_report() {
    let path = write_data("csvfmt.txt", "0.0\n0.4\n1.1\n1.4\n");
    let out = run(&[
        "fit",
        "--data",
        path.to_str().unwrap(),
        "--s",
        "1",
        "--sigma0",
        "0.1",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("section,key,value\n"));
    assert!(text.contains("result,loglik,"));
}

#[test]
fn contamination_search_reports_verdicts() {
    let path = two_group_file("probe.txt");
    let out = run(&[
        "search",
        "--data",
        path.to_str().unwrap(),
        "--mode",
        "contamination",
        "--add",
        "50,50,50",
        "--noise",
        "improper:0.0117",
        "--s",
        "2",
        "--sigma0",
        "0.025",
        "--restarts",
        "24",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["result"]["parameter_breakdown"], true);
}
