use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const DIRICHLET: &str = r#"{"jumps":[[1],[-1]],"law":{"kind":"dirichlet","alphas":[2,1]}}"#;
const DRIFT: &str = r#"{"jumps":[[1],[2]],"law":{"kind":"mixture","atoms":[{"w":1,"p":[0.5,0.5]}]}}"#;
const SIMPLE: &str = r#"{"jumps":[[1],[-1]],"law":{"kind":"mixture","atoms":[{"w":1,"p":[0.5,0.5]}]}}"#;
const EXAMPLE2: &str = r#"{"jumps":[[0],[1],[2]],"law":{"kind":"mixture","atoms":[{"w":0.5,"p":[0.5,0.5,0]},{"w":0.5,"p":[0,0,1]}]}}"#;
const COIN: &str = r#"{"jumps":[[1],[2]],"law":{"kind":"mixture","atoms":[{"w":0.5,"p":[1,0]},{"w":0.5,"p":[0,1]}]}}"#;

fn rwre(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rwre")).args(args).current_dir(dir).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = rwre(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    rwre(dir, args).status.code().expect("exit code")
}

fn workdir(config: &str) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("config.json"), config).unwrap();
    dir
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap()
}

/// Jump lines of a trajectory file, without the header.
fn jump_lines(path: PathBuf) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(str::to_string).collect()
}

#[test]
fn simulate_is_reproducible_byte_for_byte() {
    let dir = workdir(DIRICHLET);
    let d = dir.path();
    ok(d, &["simulate", "--config", "config.json", "--seed", "3", "--steps", "5000", "--out", "a"]);
    ok(d, &["simulate", "--config", "config.json", "--seed", "3", "--steps", "5000", "--out", "b"]);
    ok(d, &["simulate", "--config", "config.json", "--seed", "4", "--steps", "5000", "--out", "c"]);
    let read = |p: &str| fs::read(d.join(p)).unwrap();
    assert_eq!(read("a/trajectory.txt"), read("b/trajectory.txt"));
    assert_ne!(read("a/trajectory.txt"), read("c/trajectory.txt"));
    let prov = json(d.join("a/provenance.json"));
    assert_eq!(prov["seed"], 3);
    assert_eq!(prov["config"]["steps"], 5000);
}

#[test]
fn zero_steps_writes_only_the_header() {
    let dir = workdir(DIRICHLET);
    ok(dir.path(), &["simulate", "--config", "config.json", "--steps", "0"]);
    let text = fs::read_to_string(dir.path().join("trajectory.txt")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with('#'));
}

#[test]
fn example2_walk_uses_its_three_jumps() {
    let dir = workdir(EXAMPLE2);
    let d = dir.path();
    ok(d, &["simulate", "--config", "config.json", "--steps", "100000", "--seed", "8"]);
    let lines = jump_lines(d.join("trajectory.txt"));
    assert_eq!(lines.len(), 100_000);
    assert!(lines.iter().all(|l| ["[0]", "[1]", "[2]"].contains(&l.as_str())));
    ok(d, &["estimate", "trajectory.txt"]);
    let report = json(d.join("report.json"));
    assert_eq!(report["successions"]["[0]->[2]"], 0);
    assert!(report["successions"]["[0]->[1]"].as_u64().unwrap() > 0);
    assert_eq!(report["classification"]["R"], serde_json::json!(["[0]"]));
}

#[test]
fn drift_report_has_only_the_empty_history() {
    let dir = workdir(DRIFT);
    let d = dir.path();
    ok(d, &["simulate", "--config", "config.json", "--steps", "20000"]);
    ok(d, &["estimate", "trajectory.txt"]);
    let report = json(d.join("report.json"));
    let histories = report["histories"].as_array().unwrap();
    assert_eq!(histories.len(), 1);
    assert_eq!(histories[0]["history"], serde_json::json!({}));
    assert_eq!(report["classification"]["R"], serde_json::json!([]));
    assert_eq!(report["recurrence"]["revisit_fraction"], 0.0);
}

#[test]
fn dirichlet_pipeline_recovers_beta_2_1() {
    let dir = workdir(DIRICHLET);
    let d = dir.path();
    ok(d, &["simulate", "--config", "config.json", "--steps", "1000000", "--seed", "12"]);
    ok(d, &["estimate", "trajectory.txt"]);
    let report = json(d.join("report.json"));
    let empty = &report["histories"][0];
    assert_eq!(empty["history"], serde_json::json!({}));
    let (v, count) = (empty["V"]["[1]"].as_f64().unwrap(), empty["count"].as_f64().unwrap());
    let se = (2.0 / 9.0 / count).sqrt();
    assert!((v - 2.0 / 3.0).abs() <= 3.0 * se, "V(empty)[+1] = {v} from {count}");

    for (input, out) in [("trajectory.txt", "from-walk"), ("report.json", "from-report")] {
        ok(d, &["reconstruct", input, "--out", out]);
        let verdict = json(d.join(out).join("verdict.json"));
        assert_eq!(verdict["verdict"], "complete", "{input}");
        let mut rows = csv::Reader::from_path(d.join(out).join("cdf.csv")).unwrap();
        let err = rows
            .records()
            .map(|r| {
                let r = r.unwrap();
                let (a, f): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
                (f - a * a).abs()
            })
            .fold(0.0, f64::max);
        assert!(err <= 0.1, "{input}: sup error {err}");
    }
}

#[test]
fn two_non_returning_jumps_give_moments_only() {
    let dir = workdir(COIN);
    let d = dir.path();
    ok(d, &["simulate", "--config", "config.json", "--steps", "10000"]);
    ok(d, &["reconstruct", "trajectory.txt", "--out", "walk"]);
    ok(d, &["reconstruct", "--config", "config.json", "--out", "law"]);
    for out in ["walk", "law"] {
        assert_eq!(json(d.join(out).join("verdict.json"))["verdict"], "moments-only", "{out}");
        assert!(!d.join(out).join("cdf.csv").exists());
        assert!(d.join(out).join("moments.csv").exists());
    }
}

#[test]
fn deterministic_law_moments_are_powers_of_one_half() {
    let dir = workdir(DRIFT);
    let d = dir.path();
    ok(d, &["reconstruct", "--config", "config.json", "--degree", "8"]);
    let mut rows = csv::Reader::from_path(d.join("moments.csv")).unwrap();
    let mut seen = 0;
    for r in rows.records() {
        let r = r.unwrap();
        if let Some(k) = r[0].strip_prefix("{[1]:").and_then(|s| s.strip_suffix('}')).filter(|s| !s.contains(',')) {
            let k: i32 = k.parse().unwrap();
            let m: f64 = r[1].parse().unwrap();
            assert!((m - 0.5f64.powi(k)).abs() < 1e-12, "{}", &r[0]);
            seen += 1;
        }
    }
    assert!(seen >= 8);
}

#[test]
fn resample_writes_the_requested_replicas() {
    let dir = workdir(SIMPLE);
    let d = dir.path();
    ok(d, &["simulate", "--config", "config.json", "--steps", "2000"]);
    ok(d, &["resample", "trajectory.txt", "--replicas", "1", "--out", "one"]);
    let names: Vec<String> = fs::read_dir(d.join("one")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert!(names.contains(&"replica-1.txt".to_string()));
    assert!(!names.iter().any(|n| n == "replica-2.txt"));
    let summary = json(d.join("one/replicas.json"));
    assert_eq!(summary["source_length"], 2000);
}

#[test]
fn empty_source_gives_truncated_empty_replicas() {
    let dir = workdir(SIMPLE);
    let d = dir.path();
    ok(d, &["simulate", "--config", "config.json", "--steps", "0"]);
    ok(d, &["resample", "trajectory.txt", "--replicas", "3"]);
    for i in 1..=3 {
        let text = fs::read_to_string(d.join(format!("replica-{i}.txt"))).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.contains("truncated=true"), "{text}");
    }
    let summary = json(d.join("replicas.json"));
    assert!(summary["replicas"].as_array().unwrap().iter().all(|r| r["steps"] == 0 && r["truncated"] == true));
}

// Each replica of a recurrent walk is built from the stream left over by the
// previous split, so lengths shrink fast along X1, X3, X5, X7. This checks the
// stated length target for the most favourable recurrent source, the simple walk.
#[test]
fn four_replicas_of_a_long_recurrent_walk_are_long() {
    let dir = workdir(SIMPLE);
    let d = dir.path();
    ok(d, &["simulate", "--config", "config.json", "--steps", "1000000", "--seed", "5"]);
    ok(d, &["resample", "trajectory.txt", "--replicas", "4"]);
    let summary = json(d.join("replicas.json"));
    let lengths: Vec<u64> = summary["replicas"].as_array().unwrap().iter().map(|r| r["steps"].as_u64().unwrap()).collect();
    assert_eq!(lengths.len(), 4);
    assert!(lengths.iter().all(|&n| n >= 10_000), "replica lengths {lengths:?}");
}

#[test]
fn flags_override_the_config_file() {
    let dir = workdir(r#"{"jumps":[[1],[-1]],"law":{"kind":"dirichlet","alphas":[2,1]},"seed":9,"steps":50}"#);
    let d = dir.path();
    ok(d, &["simulate", "--config", "config.json", "--steps", "70"]);
    let prov = json(d.join("provenance.json"));
    assert_eq!((prov["seed"].as_u64(), prov["config"]["steps"].as_u64()), (Some(9), Some(70)));
    assert_eq!(jump_lines(d.join("trajectory.txt")).len(), 70);
}

#[test]
fn exit_codes_follow_the_failure_kind() {
    let dir = workdir(DIRICHLET);
    let d = dir.path();
    assert_eq!(code(d, &["simulate", "--config", "config.json", "--bogus"]), 2);
    fs::write(d.join("typo.json"), r#"{"jumps":[[1],[-1]],"stepz":10}"#).unwrap();
    assert_eq!(code(d, &["simulate", "--config", "typo.json"]), 2);
    assert_eq!(code(d, &["simulate", "--config", "missing.json"]), 3);
    assert_eq!(code(d, &["estimate", "missing.txt"]), 3);
    assert_eq!(code(d, &["fixture", "example1", "--steps", "500"]), 4);
    assert!(d.join("fixture-example1.json").exists());
}

#[test]
fn malformed_trajectory_errors_name_the_line() {
    let dir = workdir(DIRICHLET);
    let d = dir.path();
    ok(d, &["simulate", "--config", "config.json", "--steps", "10"]);
    let mut text = fs::read_to_string(d.join("trajectory.txt")).unwrap();
    text.push_str("[oops]\n");
    fs::write(d.join("bad.txt"), text).unwrap();
    let out = rwre(d, &["estimate", "bad.txt"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("12"), "{stderr}");
}
