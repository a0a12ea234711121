//! End-to-end checks of the command-line interface: exit-code contract,
//! deterministic output, JSON round trips, and fixture handling.

use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_extcube"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn basis_lists_weight_8() {
    let out = run(&["basis", "-p", "2", "-n", "1", "-w", "8"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("xi1^2"));
    assert!(text.contains("xi2"));
    assert!(text.contains("tau2"));
    assert!(text.contains("stem=-7"));
}

#[test]
fn basis_weight_162_contains_the_displayed_monomials() {
    let out = run(&["basis", "-p", "3", "-n", "2", "-w", "162"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("xi1^18 tau3"));
    assert!(text.contains("deg=125"));
    assert!(text.lines().count() >= 18);
}

#[test]
fn deterministic_output_byte_for_byte() {
    let args = [
        "chart", "-p", "2", "-n", "1", "--max-s", "6", "--format", "json",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let args = ["selftest", "-p", "3", "-n", "1", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn chart_json_round_trips() {
    let out = run(&[
        "chart", "-p", "2", "-n", "1", "--max-s", "5", "--format", "json",
    ]);
    assert!(out.status.success());
    let chart = extcube::ExtChart::from_json(&stdout(&out)).unwrap();
    assert_eq!(chart.p, 2);
    assert_eq!(chart.n, 1);
    let again = extcube::ExtChart::from_json(&chart.to_json()).unwrap();
    assert_eq!(again, chart);
}

#[test]
fn verify_passes_and_trace_reproduces() {
    let out = run(&["verify", "-p", "2", "-n", "0", "--max-s", "10"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("pass"));

    let out = run(&[
        "trace",
        "-p",
        "3",
        "-n",
        "2",
        "--start",
        "v0^4 v1^2 * xi1^18 tau3",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("result: 0"));
    assert!(text.contains("v0^4 v2^2 * xi2^6 tau3"));
}

#[test]
fn corrupted_complex_file_fails_with_exit_one() {
    let dir = std::env::temp_dir();
    let good: PathBuf = dir.join("extcube_cli_good.complex");
    let bad: PathBuf = dir.join("extcube_cli_bad.complex");
    std::fs::write(
        &good,
        "directions=2\n\
         cell a grading=(0,0)\n\
         cell b grading=(-1,1)\n\
         cell x grading=(1,0)\n\
         cell y grading=(0,1)\n\
         cell z grading=(-1,2)\n\
         d0 a = x\n\
         d1 a = y\n\
         d0 b = y\n\
         d1 b = z\n",
    )
    .unwrap();
    std::fs::write(
        &bad,
        "directions=2\n\
         cell a grading=(0,0)\n\
         cell b grading=(-1,1)\n\
         cell x grading=(1,0)\n\
         cell y grading=(0,1)\n\
         cell z grading=(-1,2)\n\
         d0 a = x\n\
         d1 a = y\n\
         d0 b = x\n\
         d1 b = z\n",
    )
    .unwrap();
    let out = run(&[
        "verify",
        "-p",
        "3",
        "--complex-file",
        good.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stdout(&out));

    let out = run(&["verify", "-p", "3", "--complex-file", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("violation"));

    // trace on the fixture gives z for [x]
    let out = run(&[
        "trace",
        "-p",
        "3",
        "--complex-file",
        good.to_str().unwrap(),
        "--start",
        "x",
        "--order",
        "1,0",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("result: z"));
}

#[test]
fn config_errors_exit_two() {
    // prime off the whitelist
    let out = run(&["chart", "-p", "11", "-n", "0", "--max-s", "3"]);
    assert_eq!(out.status.code(), Some(2));
    // and accepted with the override
    let out = run(&[
        "chart",
        "-p",
        "11",
        "-n",
        "0",
        "--max-weight",
        "44",
        "--max-s",
        "3",
        "--allow-any-prime",
    ]);
    assert!(out.status.success());

    // window over the cell budget
    let out = run(&["chart", "-p", "7", "-n", "2"]);
    assert_eq!(out.status.code(), Some(2));

    // malformed start element
    let out = run(&["trace", "-p", "3", "-n", "2", "--start", "w1 * qq3"]);
    assert_eq!(out.status.code(), Some(2));

    // non-permutation order
    let out = run(&[
        "trace",
        "-p",
        "3",
        "-n",
        "2",
        "--start",
        "v0 * xi3^2 tau3",
        "--order",
        "2,2,0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn vacuous_windows_pass() {
    let out = run(&["verify", "-p", "3", "-n", "2", "--max-weight", "0"]);
    assert!(out.status.success(), "{}", stdout(&out));
    let out = run(&[
        "oracle-compare",
        "-p",
        "3",
        "-n",
        "2",
        "--max-weight",
        "0",
        "--max-s",
        "4",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("0 mismatches"));
}

#[test]
fn oracle_compare_is_clean_on_default_windows() {
    for (p, n) in [("2", "0"), ("2", "1"), ("3", "1")] {
        let out = run(&["oracle-compare", "-p", p, "-n", n, "--max-s", "8"]);
        assert!(out.status.success(), "p={p} n={n}: {}", stdout(&out));
        assert!(stdout(&out).contains("0 mismatches"));
    }
}

#[test]
fn svg_output_is_wellformed() {
    let out = run(&[
        "chart", "-p", "2", "-n", "1", "--max-s", "5", "--format", "svg",
    ]);
    assert!(out.status.success());
    let svg = stdout(&out);
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("circle"));
}
