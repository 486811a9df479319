use std::process::Command;

use unitfilt::cli::{IndexTable, KappaReport};

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_unitfilt"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
    )
}

fn theta_column(text: &str) -> Vec<i64> {
    text.lines()
        .skip(2)
        .map(|l| l.split('\t').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn index_tables() {
    let (code, out) = run(&["index", "--p", "5", "--r", "3", "--i", "11899"]);
    assert_eq!(code, 0);
    assert_eq!(theta_column(&out), vec![2380, 476, 96, 20, 4, 1]);
    let (code, out) = run(&["index", "--p", "5", "--r", "5", "--i", "92729"]);
    assert_eq!(code, 0);
    assert_eq!(theta_column(&out), vec![18545, 3709, 741, 148, 29, 5, 1]);
}

#[test]
fn validation_errors_exit_2() {
    assert_eq!(run(&["index", "--p", "5", "--r", "3", "--i", "4"]).0, 2);
    assert_eq!(run(&["kappa", "--p", "4", "--r", "3", "--i", "7"]).0, 2);
    assert_eq!(run(&["verify", "--suite", "nonsense"]).0, 2);
}

#[test]
fn kappa_json_round_trips() {
    let (code, out) = run(&[
        "kappa", "--p", "5", "--r", "5", "--i", "92729", "--emit", "json",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let syms: Vec<&str> = v["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["symbolic"].as_str().unwrap())
        .collect();
    assert_eq!(syms[5], "(ρ⁵T⁴ + ρ⁴T²⁸)u₅ + ρ⁷w");
    assert_eq!(syms[6], "ρ⁶u₅ + ρ⁷w");
    let rep: KappaReport = serde_json::from_str(&out).unwrap();
    assert_eq!(serde_json::to_value(&rep).unwrap(), v);
    let (_, out) = run(&[
        "index", "--p", "5", "--r", "3", "--i", "11899", "--emit", "json",
    ]);
    let t: IndexTable = serde_json::from_str(&out).unwrap();
    assert_eq!(t.rows.len(), 6);
    assert_eq!(
        serde_json::to_value(&t).unwrap(),
        serde_json::from_str::<serde_json::Value>(&out).unwrap()
    );
}

#[test]
fn kappa_depths_verified_within_budget() {
    let (code, out) = run(&["kappa", "--p", "3", "--f", "2", "--r", "2", "--i", "60"]);
    assert_eq!(code, 0);
    assert_eq!(out.matches("≥ i").count(), 4);
    let (code, out) = run(&["kappa", "--p", "3", "--r", "2", "--i", "8", "--n", "2"]);
    assert_eq!(code, 0, "{out}");
    // r = i prints u_r alone
    let (_, out) = run(&["kappa", "--p", "5", "--r", "3", "--i", "3"]);
    assert!(out.contains("= u₃"), "{out}");
}

#[test]
fn gens_reports() {
    let (code, out) = run(&["gens", "--p", "3", "--r", "3", "--i", "29", "--n", "2"]);
    assert_eq!(code, 0);
    assert!(out.contains("Generates"));
    let (code, out) = run(&["gens", "--p", "5", "--r", "4", "--i", "4", "--emit", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["cardinality"], 1);
}

#[test]
fn verify_exit_codes() {
    let (code, out) = run(&["verify", "--budget", "0"]);
    assert_eq!(code, 4);
    assert!(out.contains("no tests executed"));
    let (code, out) = run(&[
        "verify", "--suite", "index", "--budget", "2000", "--emit", "json",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["failed"], 0);
}
