//! Prompt templates sent to the answering model and to the binary judge.
//!
//! Placeholders are substituted in a single left-to-right pass, so braces
//! inside a question or answer are never re-expanded.

use crate::error::{Error, Result};
use crate::space::RenderedConfig;

pub const GENERATION_TEMPLATE: &str = "\
1. Objective
Your task is to generate a comprehensive answer to the provided question while tailoring your reasoning and response style to the specific demands of the task. Ensure that your answer fully adheres to the requirements without inventing any details.

2. Question: {question}

3. Adaptive Reasoning Strategy
Use the following instructions to shape your response: {instruction_prompt}. Reason in according to the given method and adjust your reasoning approach dynamically based on the nature of the question:

You must follow no more than {optimal_steps} reasoning steps.

Requirements:
1. Provide one answer that completely satisfies the question's requirements.
2. Ensure your reasoning strictly adheres to the specified steps and covers all necessary details.
3. Deliver a clear, precise, and accurate answer.
4. Avoid repetition or ambiguity; your response should be distinct and well-reasoned.
";

pub const JUDGE_TEMPLATE: &str = "\
Assess with rigorous precision whether the provided reasoning process matches the ground truth answer.

For a given option and response, you need to match the content of the option and response. You must not rely on the option index only, as in many cases, the index is actually incorrect.

Apply these criteria for judgment and carefully consider:

Mandatory Evaluation Criteria
1. Content Equivalence: Accept only fully equivalent numerical representations (e.g., 0.5, 50%, 1/2) and variations in units or notation when they completely match the ground truth.
2. Logical Inference: Verify that at least one reasoning step directly and logically deduces the entire correct answer in a mathematically or logically sound manner.
3. Substantive Matching: For multiple-choice questions, assess the complete content of the answer (e.g., ensure \"Option B\" is fully equivalent to the correct answer, not just matching the label).
4. Semantic and Methodological Equivalence: Recognize alternative phrasing or solution methods only if a single step unambiguously converges on the complete correct answer.
5. Scientific and Technical Rigor: In technical contexts, differences in terminology, notation, or intermediate steps are acceptable only when they lead clearly and entirely to the correct conclusion.

Using the criteria outlined above, determine whether any single rule is met--if so, the response is considered a match.

Question
{question}

Ground Truth Answer
{correct_answer}

Provided Reasoning
{reasoning_process}

Provide your final judgment as a JSON object with the following structure:

{
  \"judge_explanation\": \"<brief explanation>\",
  \"result\": \"<Yes or No>\"
}

Make sure you output JSON in plain text, not as code format.
";

/// Fill `{name}` placeholders from `vars`. Unknown `{...}` spans are copied
/// through untouched, which keeps the literal JSON braces in the judge
/// template intact.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open + 1..];
        let hit = tail.find('}').and_then(|close| {
            let key = &tail[..close];
            vars.iter()
                .find(|(name, _)| *name == key)
                .map(|(_, value)| (close, *value))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &tail[close + 1..];
            }
            None => {
                out.push('{');
                rest = tail;
            }
        }
    }
    out.push_str(rest);
    out
}

fn require(name: &str, value: &str) -> Result<()> {
    if value.trim().is_empty() {
        return Err(Error::validation(format!("{name} is empty")));
    }
    Ok(())
}

/// Prompt asking the answering model to solve `question` under `config`.
pub fn render_generation_prompt(question: &str, config: &RenderedConfig) -> Result<String> {
    require("question", question)?;
    let steps = config.steps.to_string();
    Ok(fill(
        GENERATION_TEMPLATE,
        &[
            ("question", question),
            ("instruction_prompt", &config.instruction_text),
            ("optimal_steps", &steps),
        ],
    ))
}

/// Prompt asking a judge model whether `reasoning` reaches `correct_answer`.
pub fn render_judge_prompt(question: &str, correct_answer: &str, reasoning: &str) -> Result<String> {
    require("question", question)?;
    require("correct answer", correct_answer)?;
    Ok(fill(
        JUDGE_TEMPLATE,
        &[
            ("question", question),
            ("correct_answer", correct_answer),
            ("reasoning_process", reasoning),
        ],
    ))
}

/// Single-sequence statement scored by a scalar reward model.
pub fn reward_statement(question: &str, answer: &str, reference: &str) -> String {
    format!("For {question}, the generated answer {answer} matches the ground truth {reference} and is correct")
}
