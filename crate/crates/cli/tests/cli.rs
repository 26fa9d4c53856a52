use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn diga(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diga"))
        .args(args)
        .env_remove("DIGA_SEED")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut args = vec!["synth", "--out", s(&path)];
    args.extend_from_slice(extra);
    let out = diga(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn curve(dir: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(dir.join("curve.csv")).unwrap();
    assert_eq!(
        r.headers().unwrap(),
        vec!["iteration", "best_cost", "leader_best", "follower_best", "mutation_rate", "swapped"]
    );
    r.records().map(Result::unwrap).collect()
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn missing_train_is_a_config_error() {
    let out = diga(&["evolve", "--out", "nowhere"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--train"));
}

#[test]
fn zero_width_layer_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let train = synth(tmp.path(), "t.bin", &[]);
    let out = diga(&["gd", "--arch", "12288,0,1", "--train", s(&train), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_examples_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let out = diga(&["synth", "--examples", "0", "--out", s(&tmp.path().join("x.bin"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_is_reproducible_and_seed_env_wins() {
    let tmp = TempDir::new().unwrap();
    let a = std::fs::read(synth(tmp.path(), "a.bin", &["--seed", "7"])).unwrap();
    let b = std::fs::read(synth(tmp.path(), "b.bin", &["--seed", "7"])).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 14 + 4 * 50 * 100 + 100);

    let c = tmp.path().join("c.bin");
    let out = Command::new(env!("CARGO_BIN_EXE_diga"))
        .args(["synth", "--seed", "1", "--out", s(&c)])
        .env("DIGA_SEED", "7")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read(c).unwrap(), a);
}

#[test]
fn high_stop_cost_logs_one_row() {
    let tmp = TempDir::new().unwrap();
    let train = synth(tmp.path(), "t.bin", &[]);
    let run = tmp.path().join("run");
    let out = diga(&[
        "evolve", "--max-dims", "50,5,5,1", "--stop-cost", "1.0", "--train", s(&train), "--out", s(&run),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = curve(&run);
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "0");
    let best: f64 = rows[0][1].parse().unwrap();
    assert!((best - std::f64::consts::LN_2).abs() < 1e-12);
    assert_eq!(report(&run)["stop_reason"], "stop_cost");
}

#[test]
fn curve_numbers_round_trip_to_the_report() {
    let tmp = TempDir::new().unwrap();
    let train = synth(tmp.path(), "t.bin", &["--features", "8", "--examples", "30"]);
    let test = synth(tmp.path(), "v.bin", &["--features", "8", "--examples", "10", "--seed", "3"]);
    let run = tmp.path().join("run");
    let out = diga(&[
        "evolve", "--max-dims", "8,3,3,1", "--stop-cost", "1e-9", "--max-iter", "25", "--size", "3",
        "--train", s(&train), "--test", s(&test), "--out", s(&run),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = curve(&run);
    assert_eq!(rows.len(), 25);
    let last: f64 = rows[24][1].parse().unwrap();
    let rep = report(&run);
    assert_eq!(rep["leader"][0]["cost"].as_f64().unwrap(), last);
    assert_eq!(rep["leader"].as_array().unwrap().len(), 3);
    assert!(rep["leader"][0]["test_accuracy"].is_number());

    let schema: serde_json::Value =
        serde_json::from_str(include_str!("../../core/schema/report.schema.json")).unwrap();
    assert!(jsonschema::is_valid(&schema, &rep));

    let resolved: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("config.resolved.json")).unwrap()).unwrap();
    assert_eq!(resolved["size"], 3);
    assert_eq!(resolved["mutation_scale"], 0.008);
}

#[test]
fn config_file_sets_values_and_flags_override() {
    let tmp = TempDir::new().unwrap();
    let train = synth(tmp.path(), "t.bin", &["--features", "6", "--examples", "20"]);
    let cfg = tmp.path().join("c.json");
    std::fs::write(&cfg, r#"{"max_dims": [6, 3, 2, 1], "max_iter": 4, "size": 2, "seed": 9}"#).unwrap();
    let run = tmp.path().join("run");
    let out = diga(&[
        "evolve", "--config", s(&cfg), "--seed", "11", "--stop-cost", "1e-9", "--train", s(&train), "--out", s(&run),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let resolved: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("config.resolved.json")).unwrap()).unwrap();
    assert_eq!(resolved["seed"], 11);
    assert_eq!(resolved["max_iter"], 4);
    assert_eq!(curve(&run).len(), 4);

    // The echo is itself a valid config file.
    let again = tmp.path().join("again");
    let out = diga(&[
        "evolve", "--config", s(&run.join("config.resolved.json")), "--train", s(&train), "--out", s(&again),
    ]);
    assert!(out.status.success());
    assert_eq!(
        std::fs::read(run.join("curve.csv")).unwrap(),
        std::fs::read(again.join("curve.csv")).unwrap()
    );
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let train = synth(tmp.path(), "t.bin", &[]);
    let cfg = tmp.path().join("c.json");
    std::fs::write(&cfg, r#"{"max_dims": [50, 5, 1], "populaton": 5}"#).unwrap();
    let out = diga(&["evolve", "--config", s(&cfg), "--train", s(&train), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("populaton"));
}

#[test]
fn feature_mismatch_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let train = synth(tmp.path(), "t.bin", &[]);
    let out = diga(&["evolve", "--max-dims", "40,5,1", "--train", s(&train), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unreadable_or_corrupt_data_exits_3() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("missing.bin");
    let out = diga(&["evolve", "--max-dims", "50,5,1", "--train", s(&missing), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(3));

    let train = synth(tmp.path(), "t.bin", &[]);
    let mut bytes = std::fs::read(&train).unwrap();
    bytes.pop();
    std::fs::write(&train, bytes).unwrap();
    let out = diga(&["evolve", "--max-dims", "50,5,1", "--train", s(&train), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("byte"));
}

#[test]
fn gd_with_zero_rate_keeps_its_initial_cost() {
    let tmp = TempDir::new().unwrap();
    let train = synth(tmp.path(), "t.bin", &[]);
    let run = tmp.path().join("gd");
    let out = diga(&[
        "gd", "--arch", "50,4,1", "--lr", "0", "--iters", "10", "--train", s(&train), "--out", s(&run),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = curve(&run);
    assert_eq!(rows.len(), 11);
    let initial: f64 = rows[0][1].parse().unwrap();
    assert_eq!(report(&run)["leader"][0]["cost"].as_f64().unwrap(), initial);
    assert!(rows.iter().all(|r| r[3].is_empty() && r[4].is_empty() && r[5].is_empty()));
    assert_eq!(report(&run)["follower"].as_array().unwrap().len(), 0);
}
