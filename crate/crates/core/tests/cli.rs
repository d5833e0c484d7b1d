use std::path::Path;
use std::process::{Command, Output};

use freight_bidding::io::load_checkpoint;
use freight_bidding::policy::FeatureSet;

fn freight_bid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freight-bid")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = r#"{"learn": {"episodes": 30, "horizon": 40, "validation_episodes": 2, "validation_horizon": 100}}"#;

#[test]
fn train_writes_outputs_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.json", SMALL);
    let outs: Vec<String> = ["a", "b"].iter().map(|n| dir.path().join(n).to_str().unwrap().to_string()).collect();
    for out in &outs {
        let o = freight_bid(&["train", "--config", &config, "--seed", "7", "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for file in ["trace.csv", "policy.json"] {
        let a = std::fs::read(Path::new(&outs[0]).join(file)).unwrap();
        let b = std::fs::read(Path::new(&outs[1]).join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
    let trace = std::fs::read_to_string(Path::new(&outs[0]).join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 31);

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(Path::new(&outs[0]).join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"], serde_json::json!([7]));
    assert_eq!(manifest["config"]["learn"]["seed"], 7);
    assert_eq!(manifest["config"]["instance"]["capacity"], 80);
    assert!(manifest["finished_at"].is_u64());
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);

    let (_, features, checkpoint) = load_checkpoint(&Path::new(&outs[0]).join("policy.json")).unwrap();
    assert_eq!(features, FeatureSet::Standard);
    assert_eq!(checkpoint.config_hash, manifest["config_hash"].as_str().unwrap());
}

#[test]
fn different_seeds_give_different_traces() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.json", SMALL);
    for (seed, out) in [("1", "a"), ("2", "b")] {
        let out = dir.path().join(out);
        assert!(freight_bid(&["train", "--config", &config, "--seed", seed, "--out", out.to_str().unwrap()]).status.success());
    }
    let a = std::fs::read(dir.path().join("a/trace.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/trace.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn validate_reports_cost_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.json", SMALL);
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();
    assert!(freight_bid(&["train", "--config", &config, "--out", out]).status.success());
    let policy = format!("{out}/policy.json");
    let o = freight_bid(&["validate", "--policy", &policy, "--episodes", "3", "--horizon", "200", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("mean validation cost"));
    let csv = std::fs::read_to_string(format!("{out}/validation.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().last().unwrap().starts_with("pooled,"));
}

#[test]
fn validate_rejects_bad_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let names: Vec<String> = freight_bidding::policy::STANDARD_FEATURES.iter().map(|s| format!("\"{s}\"")).collect();
    let names = names.join(",");
    for (file, json) in [
        ("seven.json", format!(r#"{{"theta": [0,0,0,0,0,0,0], "sigma": 1.0, "feature_order": [{names}], "config_hash": ""}}"#)),
        ("sigma.json", format!(r#"{{"theta": [0,0,0,0,0,0,0,0], "sigma": 0.0, "feature_order": [{names}], "config_hash": ""}}"#)),
        ("order.json", r#"{"theta": [0,0], "sigma": 1.0, "feature_order": ["bias", "velocity"], "config_hash": ""}"#.to_string()),
    ] {
        let path = write_config(dir.path(), file, &json);
        let o = freight_bid(&["validate", "--policy", &path, "--episodes", "1", "--horizon", "5", "--out", dir.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{file}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("checkpoint"), "{file}");
    }
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(freight_bid(&["fly"]).status.code(), Some(2));
    assert_eq!(freight_bid(&[]).status.code(), Some(2));
    assert_eq!(freight_bid(&["sweep", "velocity"]).status.code(), Some(2));
    assert_eq!(freight_bid(&["train", "--seed", "abc"]).status.code(), Some(2));
    assert_eq!(freight_bid(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_errors_exit_with_1_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    for (json, key) in [
        (r#"{"instance": {"velocity": 1}}"#, "velocity"),
        (r#"{"instance": {"capacity": -1}}"#, "capacity"),
        (r#"{"learn": {"alpha_sigma": 0}}"#, "alpha_sigma"),
        (r#"{"instance": "#, "line"),
    ] {
        let config = write_config(dir.path(), "c.json", json);
        let o = freight_bid(&["train", "--config", &config, "--out", out]);
        assert_eq!(o.status.code(), Some(1), "{json}");
        assert!(String::from_utf8_lossy(&o.stderr).contains(key), "{json}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = freight_bid(&["train", "--config", "/nonexistent/config.json", "--out", out]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn divergence_exits_with_3_and_reports_the_episode() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "c.json",
        r#"{"learn": {"episodes": 5, "sigma0": 1e-300, "sigma_floor": 1e-300, "theta0": [-1e6, 0, 0, 0, 0, 0, 0, 0]}}"#,
    );
    let o = freight_bid(&["train", "--config", &config, "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("episode 0"));
}

#[test]
fn sharing_sweep_writes_eleven_rates_per_replication() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "c.json",
        r#"{"learn": {"horizon": 1000, "validation_every": 0, "validation_episodes": 1, "validation_horizon": 50}}"#,
    );
    let out = dir.path().join("s");
    let o = freight_bid(&["sweep", "sharing", "--config", &config, "--replications", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("sharing.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("scenario,sharing_rate,seed,status,"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 22);
    assert!(rows.iter().all(|r| r.contains(",completed,")));
    let summary = std::fs::read_to_string(out.join("sharing_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 12);
    assert!(out.join("manifest.json").exists());
}
