//! CSV and JSON output. Floats are written in shortest round-trip form, so
//! identical runs produce identical bytes and every value parses back exactly.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::RegretTrace;
use crate::env::RewardSource;
use crate::error::{read_to_string, write_file, Error, Result};
use crate::space::ActionTriple;
use crate::trainer::Transition;

/// One row of the per-step trace. Regret columns are empty for live runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub k: usize,
    pub tau: f64,
    pub reward: f64,
    pub regret: Option<f64>,
    pub cum_regret: Option<f64>,
    pub grad_sq_norm: f64,
}

pub fn step_rows(transitions: &[Transition], regret: Option<&RegretTrace>) -> Result<Vec<StepRow>> {
    if let Some(r) = regret {
        if r.steps() != transitions.len() {
            return Err(Error::validation(format!(
                "regret trace has {} steps, run has {}",
                r.steps(),
                transitions.len()
            )));
        }
    }
    Ok(transitions
        .iter()
        .enumerate()
        .map(|(i, t)| StepRow {
            k: t.step,
            tau: t.tau,
            reward: t.reward,
            regret: regret.map(|r| r.instantaneous[i]),
            cum_regret: regret.map(|r| r.cumulative[i]),
            grad_sq_norm: t.grad_sq_norm,
        })
        .collect())
}

/// Flat form of [`Transition`] for CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRow {
    pub step: usize,
    pub question_id: String,
    pub instruction_index: usize,
    pub temperature_index: usize,
    pub steps_index: usize,
    pub reward: f64,
    pub env_reward: f64,
    pub logp_instruction: f64,
    pub logp_temperature: f64,
    pub logp_steps: f64,
    pub tau: f64,
    pub grad_sq_norm: f64,
    pub source: RewardSource,
}

impl From<&Transition> for TransitionRow {
    fn from(t: &Transition) -> Self {
        Self {
            step: t.step,
            question_id: t.question_id.clone(),
            instruction_index: t.triple.instruction_index,
            temperature_index: t.triple.temperature_index,
            steps_index: t.triple.steps_index,
            reward: t.reward,
            env_reward: t.env_reward,
            logp_instruction: t.log_probs[0],
            logp_temperature: t.log_probs[1],
            logp_steps: t.log_probs[2],
            tau: t.tau,
            grad_sq_norm: t.grad_sq_norm,
            source: t.source,
        }
    }
}

impl From<TransitionRow> for Transition {
    fn from(r: TransitionRow) -> Self {
        Self {
            step: r.step,
            question_id: r.question_id,
            triple: ActionTriple::new(r.instruction_index, r.temperature_index, r.steps_index),
            reward: r.reward,
            env_reward: r.env_reward,
            log_probs: [r.logp_instruction, r.logp_temperature, r.logp_steps],
            tau: r.tau,
            grad_sq_norm: r.grad_sq_norm,
            source: r.source,
        }
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format(e.to_string()))?;
    write_file(path, bytes)
}

fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = read_to_string(path)?;
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::format(format!("{} row {}: {e}", path.display(), i + 1))))
        .collect()
}

pub fn write_step_csv(path: &Path, rows: &[StepRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn read_step_csv(path: &Path) -> Result<Vec<StepRow>> {
    read_csv(path)
}

pub fn write_transitions_csv(path: &Path, transitions: &[Transition]) -> Result<()> {
    write_csv(path, transitions.iter().map(TransitionRow::from))
}

pub fn read_transitions_csv(path: &Path) -> Result<Vec<Transition>> {
    Ok(read_csv::<TransitionRow>(path)?.into_iter().map(Transition::from).collect())
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(e.to_string()))?;
    text.push('\n');
    write_file(path, text)
}
