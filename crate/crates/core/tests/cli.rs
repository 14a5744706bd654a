mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{ok, MockServer};
use confbandit::analysis::{read_step_csv, read_transitions_csv};
use confbandit::Checkpoint;
use serde_json::{json, Value};

const SMALL: &str = r#"
[train]
trials_per_question = 3

[embedder]
kind = "hashed"
width = 32
seed = 7

[space]
steps_values = [3, 6, 10]
temperature_values = [0.0, 0.5, 1.0]
base_instructions = ["Think step by step.", "Argue both sides."]
variation_instructions = ["Be concise.", "Double-check each step."]

[simulate]
questions = 40
probe_questions = 4
held_out = 8

[simulate.convergence]
lipschitz_pairs = 4
variance_samples = 16
snapshots = 2
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_confbandit"));
    for var in ["CONFBANDIT_LLM_URL", "CONFBANDIT_LLM_KEY", "CONFBANDIT_REWARD_URL", "CONFBANDIT_REWARD_KEY"] {
        c.env_remove(var);
    }
    c
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawn confbandit")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn dataset(dir: &Path, n: usize) -> std::path::PathBuf {
    let path = dir.join("data.jsonl");
    let lines: Vec<String> = (0..n)
        .map(|i| json!({"id": format!("q{i}"), "question": format!("What is {i} plus {i}?"), "reference": format!("{}", 2 * i)}).to_string())
        .collect();
    write(&path, &(lines.join("\n") + "\n"));
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn simulate_is_byte_reproducible_and_analyze_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, SMALL);
    for name in ["a", "b"] {
        let o = run(bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join(name)).args(["--seed", "4"]));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["transitions.csv", "regret.csv", "summary.json", "checkpoint.json"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs between identical runs");
    }

    let a = dir.path().join("a");
    let transitions = read_transitions_csv(&a.join("transitions.csv")).unwrap();
    assert_eq!(transitions.len(), 120);
    let regret = read_step_csv(&a.join("regret.csv")).unwrap();
    assert_eq!(regret.len(), 120);
    assert!(regret.iter().all(|r| r.regret.is_some()));

    let summary: Value = serde_json::from_str(&std::fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["steps"], json!(120));
    assert!(summary["convergence"]["bound"].as_f64().unwrap() > 0.0);
    assert!(summary["sublinearity_skipped"].is_string());
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], json!("simulate"));
    assert_eq!(manifest["config"]["train"]["seed"], json!(4));
    assert_eq!(manifest["config"]["space"]["steps_values"], json!([3, 6, 10]));

    // A different seed gives a different run.
    let o = run(bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("c")).args(["--seed", "5"]));
    assert!(o.status.success());
    assert_ne!(
        std::fs::read(dir.path().join("c/transitions.csv")).unwrap(),
        std::fs::read(a.join("transitions.csv")).unwrap()
    );

    let o = run(bin().args(["analyze", "--json", "--transitions"]).arg(a.join("transitions.csv")).arg("--out").arg(dir.path().join("an")));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        std::fs::read(dir.path().join("an/regret.csv")).unwrap(),
        std::fs::read(a.join("regret.csv")).unwrap()
    );
    let printed: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(printed["cumulative_regret"], summary["cumulative_regret"]);
    assert_eq!(printed["actions"], summary["actions"]);
}

#[test]
fn train_then_infer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, SMALL);
    let data = dataset(dir.path(), 3);
    let ckpt = dir.path().join("out/policy.json");
    let o = run(bin().arg("train").arg("--dataset").arg(&data).arg("--config").arg(&cfg).arg("--checkpoint").arg(&ckpt).args(["--lr", "0.05", "--shuffle", "3"]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("trained 9 steps"));
    let loaded = Checkpoint::load(&ckpt).unwrap();
    assert_eq!(loaded.space.cardinality(), 36);
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["train"]["learning_rate"], json!(0.05));
    assert_eq!(manifest["config"]["train"]["shuffle"], json!(3));
    assert!(manifest["finished_unix_ms"].as_u64().unwrap() >= manifest["started_unix_ms"].as_u64().unwrap());
    assert_eq!(read_transitions_csv(&dir.path().join("out/transitions.csv")).unwrap().len(), 9);

    let o = run(bin().arg("infer").arg("--checkpoint").arg(&ckpt).arg("2+2?"));
    assert!(o.status.success());
    let line = stdout(&o);
    assert_eq!(line.lines().count(), 1);
    assert!(line.contains("instruction=") && line.contains("temperature=") && line.contains("steps="), "{line}");
    let again = run(bin().arg("infer").arg("--checkpoint").arg(&ckpt).arg("2+2?"));
    assert_eq!(stdout(&again), line);

    let o = run(bin().arg("infer").arg("--json").arg("--checkpoint").arg(&ckpt).arg("--dataset").arg(&data));
    assert!(o.status.success());
    let ids: Vec<String> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap()["id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(ids, ["q0", "q1", "q2"]);
}

#[test]
fn empty_dataset_fails_without_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("empty.jsonl");
    write(&data, "\n");
    let ckpt = dir.path().join("policy.json");
    let o = run(bin().arg("train").arg("--dataset").arg(&data).arg("--checkpoint").arg(&ckpt));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty"));
    assert!(!ckpt.exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(bin().arg("train").arg("--nope")).status.code(), Some(1));
    assert_eq!(run(&mut bin()).status.code(), Some(1));
    assert_eq!(run(bin().args(["infer", "--checkpoint", "x.json", "--json"])).status.code(), Some(1));
    assert_eq!(run(bin().arg("--version")).status.code(), Some(0));

    let missing = run(bin().args(["train", "--dataset"]).arg(dir.path().join("none.jsonl")).args(["--checkpoint", "c.json"]));
    assert_eq!(missing.status.code(), Some(2));

    let cfg = dir.path().join("bad.toml");
    write(&cfg, "[train]\nlearning_rat = 0.1\n");
    let data = dataset(dir.path(), 2);
    let o = run(bin().arg("train").arg("--dataset").arg(&data).arg("--config").arg(&cfg).arg("--checkpoint").arg(dir.path().join("c.json")));
    assert_eq!(o.status.code(), Some(2));

    let o = run(bin().arg("train").arg("--dataset").arg(&data).args(["--env", "live", "--checkpoint"]).arg(dir.path().join("c.json")));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("CONFBANDIT_LLM_URL"));
}

#[test]
fn live_train_and_infer_against_mock_endpoints() {
    let chat = MockServer::with_handler(|i, _| ok(json!({"content": format!("reply {i}")})));
    let scorer = MockServer::start(vec![ok(json!({"score": 1.5, "score_kind": "logit"}))]);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, SMALL);
    let data = dataset(dir.path(), 2);
    let ckpt = dir.path().join("policy.json");
    let o = run(bin()
        .env("CONFBANDIT_LLM_URL", &chat.url)
        .env("CONFBANDIT_LLM_KEY", "secret-llm")
        .env("CONFBANDIT_REWARD_URL", &scorer.url)
        .arg("train").arg("--dataset").arg(&data).arg("--config").arg(&cfg)
        .args(["--env", "live", "--trials", "2", "--checkpoint"]).arg(&ckpt));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(chat.requests().len(), 4);
    assert_eq!(chat.requests()[0].header("authorization"), Some("Bearer secret-llm"));

    let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(!manifest.contains("secret-llm"));
    let manifest: Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(manifest["endpoints"], json!([chat.url, scorer.url]));
    let transcript = std::fs::read_to_string(dir.path().join("transcript.jsonl")).unwrap();
    assert_eq!(transcript.lines().count(), 4);
    let rows = read_transitions_csv(&dir.path().join("transitions.csv")).unwrap();
    assert!(rows.iter().all(|t| (t.env_reward - 1.0 / (1.0 + (-1.5f64).exp())).abs() < 1e-12));

    // Regret is undefined for live runs.
    let o = run(bin().args(["analyze", "--transitions"]).arg(dir.path().join("transitions.csv")).arg("--out").arg(dir.path().join("an")));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let regret = read_step_csv(&dir.path().join("an/regret.csv")).unwrap();
    assert!(regret.iter().all(|r| r.regret.is_none()));

    let o = run(bin()
        .env("CONFBANDIT_LLM_URL", &chat.url)
        .env("CONFBANDIT_REWARD_URL", &scorer.url)
        .args(["infer", "--live", "--json", "--checkpoint"]).arg(&ckpt).arg("What is 3+3?"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(d["answer"], json!("reply 4"));
}
