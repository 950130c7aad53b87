use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pcsm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcsm")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn generate(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name).to_string_lossy().into_owned();
    let mut all = vec!["gen", "--out", &path];
    all.extend_from_slice(args);
    assert!(pcsm(&all).status.success());
    path
}

#[test]
fn gen_is_seed_deterministic() {
    let a = pcsm(&["--seed", "5", "gen", "--n", "7", "--family", "linear"]);
    let b = pcsm(&["--seed", "5", "gen", "--n", "7", "--family", "linear"]);
    let c = pcsm(&["--seed", "6", "gen", "--n", "7", "--family", "linear"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn brute_and_dp_agree_on_format() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), "i.json", &["--seed", "2", "--n", "8"]);
    let brute = pcsm(&["--json", "brute", "--instance", &inst]);
    assert!(brute.status.success());
    let brute = json_of(&brute);
    assert!(brute["feasible_count"].as_u64().unwrap() >= 1);

    let dp = pcsm(&["--json", "dp", "--instance", &inst]);
    assert!(dp.status.success());
    let dp = json_of(&dp);
    for key in ["value", "set", "cover_vec", "pack_vec", "cells_populated"] {
        assert!(dp.get(key).is_some(), "missing {key}");
    }
    assert!(dp["value"].as_f64().unwrap() <= brute["best_value"].as_f64().unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pcsm(&["brute", "--instance", "/no/such/file.json"]).status.code(), Some(4));
    assert_eq!(pcsm(&["no-such-command"]).status.code(), Some(4));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n": 1, "objective": {"kind": "linear", "weights": [1, 2]}}"#).unwrap();
    assert_eq!(pcsm(&["brute", "--instance", bad.to_str().unwrap()]).status.code(), Some(4));

    let infeasible = dir.path().join("inf.json");
    std::fs::write(
        &infeasible,
        r#"{"n": 2, "covering": [[1, 1]], "cover_bound": [5], "objective": {"kind": "linear", "weights": [1, 1]}}"#,
    )
    .unwrap();
    assert_eq!(pcsm(&["brute", "--instance", infeasible.to_str().unwrap()]).status.code(), Some(2));

    let big = generate(dir.path(), "big.json", &["--n", "12"]);
    assert_eq!(pcsm(&["brute", "--instance", &big, "--max-n", "10"]).status.code(), Some(3));
}

#[test]
fn forbidden_modes() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), "i.json", &["--seed", "4", "--n", "7"]);
    for extra in [&[][..], &["--poly"][..], &["--cardinality", "3"][..], &["--recurrence", "backward"][..]] {
        let mut args = vec!["--json", "forbidden", "--instance", &inst];
        args.extend_from_slice(extra);
        let out = pcsm(&args);
        assert!(matches!(out.status.code(), Some(0 | 2)), "{extra:?}");
        if out.status.success() {
            assert!(json_of(&out)["pack_ratio"].as_f64().unwrap() <= 1.25 + 1e-12);
        }
    }
    let multi = generate(dir.path(), "m.json", &["--p", "2", "--n", "5"]);
    assert_eq!(pcsm(&["forbidden", "--instance", &multi]).status.code(), Some(4));
}

#[test]
fn continuous_is_reproducible_and_packs() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), "i.json", &["--seed", "9", "--n", "7", "--p", "2"]);
    let args = [
        "--json", "--seed", "3", "continuous", "--instance", &inst, "--relaxed", "--delta", "0.3", "--steps", "5",
        "--samples", "10", "--trials", "5",
    ];
    let a = pcsm(&args);
    let b = pcsm(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let doc = json_of(&a);
    assert!(doc["pack_ratio"].as_f64().unwrap() <= 1.0);
    assert!(doc["per_guess"].as_array().unwrap().len() == doc["guesses"].as_u64().unwrap() as usize);

    let out = pcsm(&["--quiet", "continuous", "--instance", &inst, "--budget", "10"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn lp_csv_matches_known_optima() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("lpf.csv");
    let out = pcsm(&["lp", "--variant", "lpf", "--m", "2,5,10", "--csv", csv_path.to_str().unwrap()]);
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_path(&csv_path).unwrap();
    let rows: Vec<(usize, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
    let expected = [(2, 0.25), (5, 0.31727598), (10, 0.33592079)];
    assert_eq!(rows.len(), 3);
    for ((m, v), (em, ev)) in rows.iter().zip(expected) {
        assert_eq!(*m, em);
        assert!((v - ev).abs() < 1e-6);
    }
    let checked = json_of(&pcsm(&["--json", "lp", "--variant", "lp", "--m", "3", "--verify-analytic"]));
    assert_eq!(checked["checks"][0]["feasible"], Value::Bool(true));
}

#[test]
fn kmedian_reports_cost() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("km.json");
    std::fs::write(
        &path,
        r#"{"facilities":[{"cap":2},{"cap":1}],"clients":3,"dist_a_pairs":[[0,1],[2,0]],"a":1,"b":3,"k":2}"#,
    )
    .unwrap();
    let doc = json_of(&pcsm(&["--json", "kmedian", "--instance", path.to_str().unwrap()]));
    assert_eq!(doc["cost"], Value::from(5));
    assert_eq!(doc["assignment"].as_array().unwrap().len(), 3);

    std::fs::write(&path, r#"{"facilities":[{"cap":1}],"clients":3,"a":1,"b":3,"k":1}"#).unwrap();
    assert_eq!(pcsm(&["kmedian", "--instance", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn bench_csv_schema_and_floor() {
    let out = pcsm(&["--seed", "1", "bench", "--n", "7", "--count", "4", "--solvers", "dp,forbidden,lpf:2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["instance_digest", "solver", "value", "brute", "ratio", "cover_ratio", "pack_ratio", "seconds", "seed"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 9);
    for row in &rows[..8] {
        if let Ok(ratio) = row[4].parse::<f64>() {
            assert!(ratio >= 0.25, "{row:?}");
        }
    }
    assert_eq!(&rows[8][1], "lpf:2");
    assert!((rows[8][2].parse::<f64>().unwrap() - 0.25).abs() < 1e-9);
}
