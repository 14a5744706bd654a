use std::path::PathBuf;

use confbandit::prompts::{render_generation_prompt, render_judge_prompt};
use confbandit::{ActionSpace, ActionTriple};
use serde::Deserialize;

#[derive(Deserialize)]
struct Fixture {
    name: String,
    question: String,
    triple: [usize; 3],
    correct_answer: String,
    reasoning: String,
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn fixtures() -> Vec<Fixture> {
    let text = std::fs::read_to_string(golden_dir().join("fixtures.json")).unwrap();
    let f: Vec<Fixture> = serde_json::from_str(&text).unwrap();
    assert_eq!(f.len(), 3);
    f
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(golden_dir().join(name)).unwrap()
}

#[test]
fn generation_prompts_match_golden_files() {
    let space = ActionSpace::build_default();
    for f in fixtures() {
        let config = space.resolve(&ActionTriple::from_array(f.triple)).unwrap();
        let got = render_generation_prompt(&f.question, &config).unwrap();
        assert_eq!(got, golden(&format!("generation_{}.txt", f.name)), "fixture {}", f.name);
    }
}

#[test]
fn judge_prompts_match_golden_files() {
    for f in fixtures() {
        let got = render_judge_prompt(&f.question, &f.correct_answer, &f.reasoning).unwrap();
        assert_eq!(got, golden(&format!("judge_{}.txt", f.name)), "fixture {}", f.name);
    }
}
