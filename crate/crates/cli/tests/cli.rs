//! End-to-end checks of the compiled binary: determinism, exit codes, and
//! output shape.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ldbounds")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ldbounds-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn experiment_csv_has_expected_rows_and_is_byte_deterministic() {
    let dir = tempdir("exp");
    let args = [
        "experiment",
        "--n",
        "50:400:50",
        "--trials",
        "5",
        "--seed",
        "7",
        "--out",
        "r.csv",
    ];
    let first = run_in(&dir, &args);
    assert!(first.status.success());
    let csv_first = std::fs::read(dir.join("r.csv")).unwrap();
    let lines: Vec<&[u8]> = csv_first.split(|&b| b == b'\n').collect();
    // header + 8 sizes x 5 trials + trailing newline split artifact
    assert_eq!(lines.len(), 1 + 40 + 1);
    assert_eq!(
        lines[0],
        b"n,trial,seed_used,log_gap_fixed,log_gap_opt,log_upper_opt,log_lower_opt,feasible"
    );

    let second = run_in(&dir, &args);
    assert!(second.status.success());
    let csv_second = std::fs::read(dir.join("r.csv")).unwrap();
    assert_eq!(csv_first, csv_second, "CSV bytes changed between runs");
    assert_eq!(first.stdout, second.stdout, "stdout changed between runs");
}

#[test]
fn generate_and_query_pipeline_is_deterministic() {
    let dir = tempdir("pipeline");
    let gen = [
        "generate",
        "--n-inputs",
        "8",
        "--n-outputs",
        "3",
        "--seed",
        "11",
        "--out",
        "net.json",
        "--evidence-out",
        "ev.json",
    ];
    assert!(run_in(&dir, &gen).status.success());
    let net_once = std::fs::read(dir.join("net.json")).unwrap();
    assert!(run_in(&dir, &gen).status.success());
    assert_eq!(net_once, std::fs::read(dir.join("net.json")).unwrap());

    for args in [
        vec!["exact", "--network", "net.json", "--evidence", "ev.json"],
        vec![
            "bounds",
            "--network",
            "net.json",
            "--evidence",
            "ev.json",
            "--gamma",
            "2",
        ],
        vec![
            "optimize",
            "--network",
            "net.json",
            "--evidence",
            "ev.json",
            "--target",
            "both",
        ],
        vec![
            "posterior",
            "--network",
            "net.json",
            "--evidence",
            "ev.json",
            "--input",
            "1",
        ],
        vec!["validate", "--seed", "5", "--n", "8"],
    ] {
        let a = run_in(&dir, &args);
        let b = run_in(&dir, &args);
        assert!(
            a.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&a.stderr)
        );
        assert_eq!(a.stdout, b.stdout, "nondeterministic stdout for {args:?}");
    }
}

#[test]
fn bounds_output_names_log_linear_and_throwaway() {
    let dir = tempdir("fields");
    run_in(
        &dir,
        &[
            "generate",
            "--n-inputs",
            "6",
            "--n-outputs",
            "2",
            "--seed",
            "3",
            "--out",
            "n.json",
            "--evidence-out",
            "e.json",
        ],
    );
    let out = run_in(
        &dir,
        &["bounds", "--network", "n.json", "--evidence", "e.json"],
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("log_lower= "));
    assert!(text.contains("log_upper= "));
    assert!(text.contains("S= "));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempdir("usage");
    let out = run_in(&dir, &["bounds", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_in(&dir, &["no-such-subcommand"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_in(
        &dir,
        &[
            "optimize",
            "--network",
            "x.json",
            "--evidence",
            "y.json",
            "--target",
            "sideways",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn computation_errors_exit_with_one_and_diagnose() {
    let dir = tempdir("errors");
    // Missing file.
    let out = run_in(
        &dir,
        &[
            "exact",
            "--network",
            "missing.json",
            "--evidence",
            "missing.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    // Enumeration limit exceeded.
    run_in(
        &dir,
        &[
            "generate",
            "--n-inputs",
            "24",
            "--n-outputs",
            "2",
            "--seed",
            "1",
            "--out",
            "big.json",
            "--evidence-out",
            "bigev.json",
        ],
    );
    let out = run_in(
        &dir,
        &[
            "exact",
            "--network",
            "big.json",
            "--evidence",
            "bigev.json",
            "--max-inputs",
            "20",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("enumeration limit"));

    // Infeasible noisy-OR interval names the offending output.
    run_in(
        &dir,
        &[
            "generate",
            "--n-inputs",
            "6",
            "--n-outputs",
            "2",
            "--transfer",
            "noisy_or",
            "--seed",
            "2",
            "--out",
            "nor.json",
            "--evidence-out",
            "norev.json",
        ],
    );
    let out = run_in(
        &dir,
        &[
            "bounds",
            "--network",
            "nor.json",
            "--evidence",
            "norev.json",
            "--epsilon",
            "9.0,9.0",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("output"));
}

/// Pull the value following `<key>= ` out of a report line.
fn field(text: &str, key: &str) -> f64 {
    let tag = format!("{key}= ");
    let start = text
        .find(&tag)
        .unwrap_or_else(|| panic!("missing {key} in {text}"))
        + tag.len();
    text[start..]
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn optimized_posterior_interval_brackets_the_exact_posterior() {
    let dir = tempdir("posterior");
    run_in(
        &dir,
        &[
            "generate",
            "--n-inputs",
            "9",
            "--n-outputs",
            "3",
            "--seed",
            "29",
            "--out",
            "p.json",
            "--evidence-out",
            "pev.json",
        ],
    );
    let exact_out = run_in(
        &dir,
        &[
            "exact",
            "--network",
            "p.json",
            "--evidence",
            "pev.json",
            "--input",
            "4",
        ],
    );
    let exact = field(
        &String::from_utf8(exact_out.stdout).unwrap(),
        "exact_posterior",
    );

    for extra in [&[][..], &["--optimize"][..]] {
        let mut args = vec![
            "posterior",
            "--network",
            "p.json",
            "--evidence",
            "pev.json",
            "--input",
            "4",
        ];
        args.extend_from_slice(extra);
        let out = run_in(&dir, &args);
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        let lo = field(&text, "posterior_lo");
        let hi = field(&text, "posterior_hi");
        assert!(
            lo <= exact && exact <= hi,
            "{extra:?}: exact {exact} outside [{lo}, {hi}]"
        );
    }
}

#[test]
fn validate_reports_skips_for_oversized_instances() {
    let dir = tempdir("skip");
    let out = run_in(&dir, &["validate", "--n", "25", "--max-inputs", "20"]);
    assert!(out.status.success(), "skips must not fail the run");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("skipped"));
    assert!(text.contains("exceeds enumeration limit"));
}
