//! Reward sources for a (question, configuration) pair.

mod live;
mod sim;

pub use live::{
    llm_generate, parse_judgment, score_binary_judge, score_scalar, ChatClient, GenerationOptions,
    LiveEnvironment, Scorer, ENV_LLM_KEY, ENV_LLM_URL, ENV_REWARD_KEY, ENV_REWARD_URL,
};
pub use sim::{
    bucket_of, sim_reward, synthetic_dataset, SimConfig, SimEnvironment, SimSpec, TableKind,
};

use serde::{Deserialize, Serialize};

use crate::dataset::QaPair;
use crate::error::Result;
use crate::space::{ActionTriple, RenderedConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardSource {
    Sim,
    ScalarEndpoint,
    BinaryJudge,
}

impl RewardSource {
    pub fn name(self) -> &'static str {
        match self {
            RewardSource::Sim => "sim",
            RewardSource::ScalarEndpoint => "scalar_endpoint",
            RewardSource::BinaryJudge => "binary_judge",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sim" => Some(RewardSource::Sim),
            "scalar_endpoint" => Some(RewardSource::ScalarEndpoint),
            "binary_judge" => Some(RewardSource::BinaryJudge),
            _ => None,
        }
    }
}

/// A reward in `[0, 1]` plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardOutcome {
    pub reward: f64,
    pub raw_answer: Option<String>,
    pub latency_ms: u64,
    pub source: RewardSource,
}

pub trait Environment {
    /// Score one trial. `config` is `triple` resolved against the training space.
    fn reward(
        &mut self,
        pair: &QaPair,
        triple: &ActionTriple,
        config: &RenderedConfig,
    ) -> Result<RewardOutcome>;

    /// Noiseless mean table, when the environment has one.
    fn sim_spec(&self) -> Option<&SimSpec> {
        None
    }
}
