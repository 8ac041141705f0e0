//! Acceptance checks that drive the built binary: the discrimination
//! instances for the beta invariant, the determinism contract, and the
//! exit-code contract.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fgshift")
}

fn work_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fgshift-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("create temp dir");
    dir
}

fn write_vector(dir: &std::path::Path, name: &str, weights: &[f64]) -> PathBuf {
    let path = dir.join(name);
    let entries: Vec<String> = weights.iter().map(|w| w.to_string()).collect();
    std::fs::write(&path, format!(r#"{{"p":[{}]}}"#, entries.join(","))).expect("write vector");
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("run binary")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON output")
}

#[test]
fn criterion_10_beta_invariant_discrimination() {
    let dir = work_dir();
    let u4 = write_vector(&dir, "u4.json", &[0.25; 4]);
    let spread = write_vector(&dir, "spread.json", &[0.5, 0.125, 0.125, 0.125, 0.125]);

    // negative instance: equal entropy, beta splits at t = 2
    let out = run(&[
        "distinguish",
        "--p",
        u4.to_str().unwrap(),
        "--q",
        spread.to_str().unwrap(),
    ]);
    let report = stdout_json(&out);
    let ln4 = 4f64.ln();
    assert!((report["entropy_p"].as_f64().unwrap() - ln4).abs() < 1e-12);
    assert!((report["entropy_q"].as_f64().unwrap() - ln4).abs() < 1e-12);
    assert_eq!(report["entropy_equal"], true);
    assert_eq!(report["equivalent"], false);
    assert_eq!(report["witness_t"].as_f64().unwrap(), 2.0);
    let row = report["beta_grid"]
        .as_array()
        .unwrap()
        .iter()
        .find(|row| row[0].as_f64().unwrap() == 2.0)
        .expect("t = 2 in grid");
    assert!((row[1].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!((row[2].as_f64().unwrap() - 0.3125).abs() < 1e-12);
    assert!(report["verdict"]
        .as_str()
        .unwrap()
        .contains("NOT permutation-equivalent"));

    // positive instance: a permuted vector through the radius-0 isomorphism
    let p = write_vector(&dir, "p532.json", &[0.5, 0.3, 0.2]);
    let out = run(&[
        "end-to-end",
        "--p",
        p.to_str().unwrap(),
        "--perm",
        "1,3,2",
        "--samples",
        "100000",
    ]);
    let report = stdout_json(&out);
    assert_eq!(report["all_pass"], true);
    assert_eq!(report["pushforward_ok"], true);
    assert_eq!(report["beta_equal_bitwise"], true);
    assert_eq!(report["expected_v"].as_f64().unwrap(), 1.0);
    assert_eq!(report["m_phi"].as_i64().unwrap(), 0);
    assert_eq!(report["a_phi"].as_i64().unwrap(), -1);

    // identity permutation passes trivially
    let out = run(&[
        "end-to-end",
        "--p",
        p.to_str().unwrap(),
        "--perm",
        "1,2,3",
        "--samples",
        "20000",
    ]);
    assert_eq!(stdout_json(&out)["all_pass"], true);

    println!("PASS criterion 10: distinguish rejects the equal-entropy pair; end-to-end certifies the permuted pair");
}

#[test]
fn determinism_contract() {
    let dir = work_dir();
    let p = write_vector(&dir, "det.json", &[0.5, 0.3, 0.2]);
    let args = [
        "beta",
        "--p",
        p.to_str().unwrap(),
        "--t",
        "-1,0.5,2",
        "--mc",
        "--n",
        "6",
        "--samples",
        "20000",
        "--seed",
        "42",
    ];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout, "same argv must give identical bytes");

    // worker count must not change the result either
    let mut with_workers = args.to_vec();
    with_workers.extend(["--workers", "4"]);
    let third = run(&with_workers);
    assert_eq!(first.stdout, third.stdout, "worker count must not alter output");

    let mut reseeded = args.to_vec();
    let last = reseeded.len() - 1;
    reseeded[last] = "43";
    let fourth = run(&reseeded);
    assert_ne!(first.stdout, fourth.stdout, "different seed should move the estimate");

    println!("PASS determinism: byte-identical output across reruns and worker counts");
}

#[test]
fn exit_code_contract() {
    let dir = work_dir();
    // validation error: rank 0
    let out = run(&["ball", "--ell", "0", "--r", "2"]);
    assert_eq!(out.status.code(), Some(2));

    // validation error: unreadable input file
    let out = run(&["beta", "--p", "/nonexistent.json", "--t", "1"]);
    assert_eq!(out.status.code(), Some(2));

    // validation error: unknown flag (handled by the parser)
    let out = run(&["ball", "--ell", "2", "--r", "1", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));

    // numeric failure: power sums with no positive-vector solution
    let out = run(&["recover", "--power-sums", "1,0.99,0.2", "--m", "3"]);
    assert_eq!(out.status.code(), Some(3));

    // cap exhaustion is a validation error, reported before any output
    let out = run(&["ball", "--ell", "3", "--r", "12", "--cap", "1000"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());

    let p = write_vector(&dir, "ok.json", &[0.5, 0.5]);
    let out = run(&["beta", "--p", p.to_str().unwrap(), "--t", "2", "--closed"]);
    assert_eq!(out.status.code(), Some(0));

    println!("PASS exit codes: 0 success, 2 validation, 3 numeric failure");
}

#[test]
fn csv_projections() {
    let dir = work_dir();
    let p = write_vector(&dir, "csv.json", &[0.5, 0.5]);
    let out = run(&[
        "beta",
        "--p",
        p.to_str().unwrap(),
        "--t",
        "0,1,2",
        "--limit",
        "5",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,closed,limit_n,mc,stderr"));
    assert_eq!(lines.clone().count(), 3);
    assert!(lines.next().unwrap().starts_with("0,2,2"));

    let out = run(&["enum-wa", "--ell", "2", "--n", "3", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.trim().lines().collect::<Vec<_>>(),
        vec!["k,word,length", "1,e,0", "2,a1,1", "3,a1a1,2"]
    );
}
