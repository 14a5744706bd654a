//! Live environment: an answering model behind a chat endpoint, scored by a
//! scalar reward endpoint or by a judge model using the binary template.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{Environment, RewardOutcome, RewardSource};
use crate::dataset::QaPair;
use crate::error::{Error, Result};
use crate::http::{JsonClient, RetryPolicy};
use crate::prompts::{render_generation_prompt, render_judge_prompt, reward_statement};
use crate::space::{ActionTriple, RenderedConfig};

pub const ENV_LLM_URL: &str = "CONFBANDIT_LLM_URL";
pub const ENV_LLM_KEY: &str = "CONFBANDIT_LLM_KEY";
pub const ENV_REWARD_URL: &str = "CONFBANDIT_REWARD_URL";
pub const ENV_REWARD_KEY: &str = "CONFBANDIT_REWARD_KEY";

/// Sampling settings sent with every chat request besides temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationOptions {
    pub top_p: f64,
    pub max_tokens: u32,
}

impl Default for GenerationOptions {
    fn default() -> Self {
        Self {
            top_p: 0.1,
            max_tokens: 5000,
        }
    }
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    messages: [Message<'a>; 1],
    temperature: f64,
    top_p: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: String,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChatResponse {
    content: Option<String>,
    #[serde(default)]
    choices: Vec<Choice>,
}

/// Single-turn chat completions: one user message, no system prompt.
#[derive(Debug, Clone)]
pub struct ChatClient {
    http: JsonClient,
}

impl ChatClient {
    pub fn new(url: impl Into<String>, key: Option<String>, retry: RetryPolicy) -> Self {
        Self {
            http: JsonClient::new(url, key, retry),
        }
    }

    pub fn url(&self) -> &str {
        self.http.url()
    }

    pub fn complete(&self, prompt: &str, temperature: f64, options: &GenerationOptions) -> Result<String> {
        let request = ChatRequest {
            messages: [Message {
                role: "user",
                content: prompt,
            }],
            temperature,
            top_p: options.top_p,
            max_tokens: options.max_tokens,
        };
        let reply: ChatResponse = self.http.post(&request)?;
        // Plain {"content": ...} is the protocol; OpenAI-style choices are accepted too.
        let text = reply
            .content
            .or_else(|| reply.choices.into_iter().next().map(|c| c.message.content))
            .unwrap_or_default();
        if text.trim().is_empty() {
            return Err(Error::env(format!("{}: empty completion", self.url())));
        }
        Ok(text)
    }
}

/// Ask the answering model to solve `pair` under `config`.
pub fn llm_generate(
    chat: &ChatClient,
    pair: &QaPair,
    config: &RenderedConfig,
    options: &GenerationOptions,
) -> Result<String> {
    let prompt = render_generation_prompt(&pair.question, config)?;
    chat.complete(&prompt, config.temperature, options)
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum ScoreKind {
    Logit,
    Unit,
}

#[derive(Deserialize)]
struct ScoreResponse {
    score: f64,
    score_kind: ScoreKind,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Score with a reward model that returns one real per statement.
pub fn score_scalar(client: &JsonClient, pair: &QaPair, answer: &str) -> Result<RewardOutcome> {
    let start = Instant::now();
    let text = reward_statement(&pair.question, answer, &pair.reference);
    let reply: ScoreResponse = client.post(&ScoreRequest { text: &text })?;
    if !reply.score.is_finite() {
        return Err(Error::env(format!("{}: non-finite score", client.url())));
    }
    let reward = match reply.score_kind {
        ScoreKind::Logit => logistic(reply.score),
        ScoreKind::Unit => reply.score.clamp(0.0, 1.0),
    };
    Ok(RewardOutcome {
        reward,
        raw_answer: Some(answer.to_string()),
        latency_ms: start.elapsed().as_millis() as u64,
        source: RewardSource::ScalarEndpoint,
    })
}

#[derive(Deserialize)]
struct Judgment {
    result: String,
}

/// Parse a judge reply into `true` (Yes) or `false` (No). Markdown code
/// fences around the JSON are stripped first.
pub fn parse_judgment(reply: &str) -> Option<bool> {
    let mut body = reply.trim();
    if let Some(rest) = body.strip_prefix("```") {
        let rest = rest.strip_prefix("json").unwrap_or(rest);
        body = rest.trim_end().strip_suffix("```").unwrap_or(rest).trim();
    }
    let start = body.find('{')?;
    let end = body.rfind('}')?;
    let judgment: Judgment = serde_json::from_str(body.get(start..=end)?).ok()?;
    match judgment.result.trim().to_ascii_lowercase().as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

/// Score with a judge model; one re-ask on an unparsable reply.
pub fn score_binary_judge(
    judge: &ChatClient,
    pair: &QaPair,
    answer: &str,
    options: &GenerationOptions,
) -> Result<RewardOutcome> {
    let start = Instant::now();
    let prompt = render_judge_prompt(&pair.question, &pair.reference, answer)?;
    let mut last = String::new();
    for _ in 0..2 {
        last = judge.complete(&prompt, 0.0, options)?;
        if let Some(verdict) = parse_judgment(&last) {
            return Ok(RewardOutcome {
                reward: if verdict { 1.0 } else { 0.0 },
                raw_answer: Some(answer.to_string()),
                latency_ms: start.elapsed().as_millis() as u64,
                source: RewardSource::BinaryJudge,
            });
        }
    }
    Err(Error::env(format!(
        "{}: unparsable judgment after re-ask: {:?}",
        judge.url(),
        last.chars().take(200).collect::<String>()
    )))
}

#[derive(Debug, Clone)]
pub enum Scorer {
    Scalar(JsonClient),
    Judge(ChatClient),
}

#[derive(Serialize)]
struct TranscriptRecord<'a> {
    question_id: &'a str,
    instruction_index: usize,
    temperature: f64,
    steps: u32,
    answer: &'a str,
    reward: f64,
    latency_ms: u64,
}

#[derive(Debug, Clone)]
pub struct LiveEnvironment {
    chat: ChatClient,
    scorer: Scorer,
    options: GenerationOptions,
    transcript: Option<PathBuf>,
}

impl LiveEnvironment {
    pub fn new(chat: ChatClient, scorer: Scorer, options: GenerationOptions) -> Self {
        Self {
            chat,
            scorer,
            options,
            transcript: None,
        }
    }

    /// Endpoints from `CONFBANDIT_*` variables. With `judge` the reward URL
    /// is treated as a chat endpoint for the binary template.
    pub fn from_env(judge: bool) -> Result<Self> {
        let var = |name: &str| std::env::var(name).ok().filter(|v| !v.is_empty());
        let llm = var(ENV_LLM_URL).ok_or_else(|| Error::validation(format!("{ENV_LLM_URL} is not set")))?;
        let reward = var(ENV_REWARD_URL)
            .ok_or_else(|| Error::validation(format!("{ENV_REWARD_URL} is not set")))?;
        let chat = ChatClient::new(llm, var(ENV_LLM_KEY), RetryPolicy::default());
        let scorer = if judge {
            Scorer::Judge(ChatClient::new(reward, var(ENV_REWARD_KEY), RetryPolicy::default()))
        } else {
            Scorer::Scalar(JsonClient::new(reward, var(ENV_REWARD_KEY), RetryPolicy::default()))
        };
        Ok(Self::new(chat, scorer, GenerationOptions::default()))
    }

    /// Append one JSON line per trial to `path`.
    pub fn with_transcript(mut self, path: PathBuf) -> Self {
        self.transcript = Some(path);
        self
    }

    pub fn chat(&self) -> &ChatClient {
        &self.chat
    }

    pub fn options(&self) -> &GenerationOptions {
        &self.options
    }

    /// Endpoint URLs for run manifests; keys are never included.
    pub fn endpoints(&self) -> Vec<String> {
        let scorer = match &self.scorer {
            Scorer::Scalar(c) => c.url().to_string(),
            Scorer::Judge(c) => c.url().to_string(),
        };
        vec![self.chat.url().to_string(), scorer]
    }

    fn log(&self, record: &TranscriptRecord<'_>) -> Result<()> {
        let Some(path) = &self.transcript else {
            return Ok(());
        };
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        let line = serde_json::to_string(record).map_err(|e| Error::format(e.to_string()))?;
        writeln!(file, "{line}").map_err(|e| Error::io(path, e))
    }
}

impl Environment for LiveEnvironment {
    fn reward(
        &mut self,
        pair: &QaPair,
        triple: &ActionTriple,
        config: &RenderedConfig,
    ) -> Result<RewardOutcome> {
        let start = Instant::now();
        let answer = llm_generate(&self.chat, pair, config, &self.options)?;
        let mut outcome = match &self.scorer {
            Scorer::Scalar(client) => score_scalar(client, pair, &answer)?,
            Scorer::Judge(judge) => score_binary_judge(judge, pair, &answer, &self.options)?,
        };
        outcome.latency_ms = start.elapsed().as_millis() as u64;
        self.log(&TranscriptRecord {
            question_id: &pair.id,
            instruction_index: triple.instruction_index,
            temperature: config.temperature,
            steps: config.steps,
            answer: &answer,
            reward: outcome.reward,
            latency_ms: outcome.latency_ms,
        })?;
        Ok(outcome)
    }
}
