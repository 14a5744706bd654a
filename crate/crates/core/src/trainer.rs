//! REINFORCE training with annealed Boltzmann exploration.
//!
//! Each question gets `T` trials. A trial samples a triple at the current
//! temperature `τ_k`, obtains a reward `r` from the environment, and applies
//! `Θ ← Θ + η · r · ∇ log Π(a | q)`. There is no baseline, no momentum, and
//! no batching. The temperature follows one global schedule over all
//! `K = M·T` steps.

use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, QaPair};
use crate::embed::Embedder;
use crate::env::{Environment, RewardSource};
use crate::error::{read_to_string, Error, Result};
use crate::policy::PolicyParams;
use crate::seed;
use crate::space::{ActionSpace, ActionTriple, Axis};

/// Decay used when the run length is unknown up front.
pub const FALLBACK_ALPHA: f64 = 0.98;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub trials_per_question: usize,
    pub tau0: f64,
    pub tau_min: f64,
    /// Per-step decay. `None` derives it so τ reaches `tau_min` on the last step.
    pub anneal_alpha: Option<f64>,
    /// Environment rewards in `[0, 1]` are mapped linearly onto this range.
    pub reward_low: f64,
    pub reward_high: f64,
    pub seed: u64,
    /// Differentiate the tempered log-probability instead of the τ = 1 one.
    pub tempered_grad: bool,
    /// Shuffle question order with this seed instead of using file order.
    pub shuffle: Option<u64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            trials_per_question: 4,
            tau0: 1.0,
            tau_min: 0.1,
            anneal_alpha: None,
            reward_low: 0.0,
            reward_high: 1.0,
            seed: 0,
            tempered_grad: false,
            shuffle: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::validation(m.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return fail("learning_rate must be positive");
        }
        if self.trials_per_question == 0 {
            return fail("trials_per_question must be at least 1");
        }
        if !(self.tau_min.is_finite() && self.tau_min > 0.0) {
            return fail("tau_min must be positive");
        }
        if !(self.tau0.is_finite() && self.tau0 >= self.tau_min) {
            return fail("tau0 must be >= tau_min");
        }
        if let Some(a) = self.anneal_alpha {
            if !(a > 0.0 && a <= 1.0) {
                return fail("anneal_alpha must be in (0, 1]");
            }
        }
        if !(self.reward_low.is_finite() && self.reward_high.is_finite() && self.reward_low < self.reward_high) {
            return fail("reward_low must be below reward_high");
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| Error::format(format!("train config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&read_to_string(path)?)
    }

    /// Temperature schedule for a run of `total_steps` (if known).
    pub fn annealer(&self, total_steps: Option<usize>) -> Annealer {
        let alpha = self.anneal_alpha.unwrap_or_else(|| match total_steps {
            Some(k) if k > 1 => (self.tau_min / self.tau0).powf(1.0 / (k - 1) as f64),
            Some(_) => 1.0,
            None => FALLBACK_ALPHA,
        });
        Annealer {
            tau0: self.tau0,
            tau_min: self.tau_min,
            alpha,
        }
    }

    /// Map an environment reward in `[0, 1]` onto `[reward_low, reward_high]`.
    pub fn scale_reward(&self, env_reward: f64) -> f64 {
        let r = self.reward_low + (self.reward_high - self.reward_low) * env_reward;
        r.clamp(self.reward_low, self.reward_high)
    }
}

/// `τ_k = max(τ_min, τ0 · α^k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annealer {
    pub tau0: f64,
    pub tau_min: f64,
    pub alpha: f64,
}

impl Annealer {
    pub fn tau(&self, step: usize) -> f64 {
        let k = i32::try_from(step).unwrap_or(i32::MAX);
        (self.tau0 * self.alpha.powi(k)).max(self.tau_min)
    }
}

pub fn anneal_tau(config: &TrainConfig, step: usize, total_steps: Option<usize>) -> f64 {
    config.annealer(total_steps).tau(step)
}

/// One training trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub step: usize,
    pub question_id: String,
    pub triple: ActionTriple,
    /// Reward used in the update, in `[reward_low, reward_high]`.
    pub reward: f64,
    /// Reward reported by the environment, in `[0, 1]`.
    pub env_reward: f64,
    /// Untempered log-probabilities of the chosen arms.
    pub log_probs: [f64; 3],
    pub tau: f64,
    pub grad_sq_norm: f64,
    pub source: RewardSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub transitions: Vec<Transition>,
    pub final_params: PolicyParams,
    /// Running mean of the update reward after each step.
    pub mean_reward_curve: Vec<f64>,
    /// `‖r_k ∇ log Π(a_k | q_k)‖²` per step.
    pub gradient_sq_norm_curve: Vec<f64>,
    pub annealer: Annealer,
}

impl TrainReport {
    fn empty(params: PolicyParams, annealer: Annealer) -> Self {
        Self {
            transitions: Vec::new(),
            final_params: params,
            mean_reward_curve: Vec::new(),
            gradient_sq_norm_curve: Vec::new(),
            annealer,
        }
    }

    pub fn steps(&self) -> usize {
        self.transitions.len()
    }

    fn push(&mut self, t: Transition) {
        let k = self.transitions.len() as f64;
        let prev = self.mean_reward_curve.last().copied().unwrap_or(0.0);
        self.mean_reward_curve.push(prev + (t.reward - prev) / (k + 1.0));
        self.gradient_sq_norm_curve.push(t.grad_sq_norm);
        self.transitions.push(t);
    }
}

/// A failed run with everything completed before the failing trial.
#[derive(Debug)]
pub struct TrainFailure {
    pub error: Error,
    pub partial: Box<TrainReport>,
}

impl fmt::Display for TrainFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} steps completed)", self.error, self.partial.steps())
    }
}

impl std::error::Error for TrainFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Parameter change for one REINFORCE update: `η · r · ∇ log Π(triple | context)`.
pub fn reinforce_delta(
    params: &PolicyParams,
    context: &[f64],
    triple: &ActionTriple,
    reward: f64,
    tau: f64,
    config: &TrainConfig,
) -> Result<PolicyParams> {
    let mut grad = if config.tempered_grad {
        params.grad_log_prob_tempered(context, triple, tau)?
    } else {
        params.grad_log_prob(context, triple)?
    };
    grad.scale(config.learning_rate * reward);
    Ok(grad)
}

/// Everything one trial needs besides the mutable parameters.
pub struct TrialInput<'a> {
    pub pair: &'a QaPair,
    pub context: &'a [f64],
    pub space: &'a ActionSpace,
    pub step: usize,
    pub tau: f64,
}

/// Sample, score, and update in place. Parameters are untouched when the
/// reward is exactly zero.
pub fn reinforce_step<R: Rng + ?Sized>(
    params: &mut PolicyParams,
    input: &TrialInput<'_>,
    env: &mut dyn Environment,
    config: &TrainConfig,
    rng: &mut R,
) -> Result<Transition> {
    let decision = params.sample(input.context, input.tau, rng)?;
    let rendered = input.space.resolve(&decision.triple)?;
    let outcome = env.reward(input.pair, &decision.triple, &rendered)?;
    if !outcome.reward.is_finite() {
        return Err(Error::Training {
            step: input.step,
            reason: format!(
                "non-finite reward {} for question {:?} at {}",
                outcome.reward, input.pair.id, decision.triple
            ),
        });
    }
    let reward = config.scale_reward(outcome.reward);
    let mut grad_sq_norm = 0.0;
    if reward != 0.0 {
        let delta = reinforce_delta(params, input.context, &decision.triple, reward, input.tau, config)?;
        grad_sq_norm = delta.norm_sq() / (config.learning_rate * config.learning_rate);
        params.add_scaled(&delta, 1.0);
        if !params.is_finite() {
            return Err(Error::Training {
                step: input.step,
                reason: "parameters became non-finite".into(),
            });
        }
    }
    Ok(Transition {
        step: input.step,
        question_id: input.pair.id.clone(),
        triple: decision.triple,
        reward,
        env_reward: outcome.reward,
        log_probs: decision.log_probs,
        tau: input.tau,
        grad_sq_norm,
        source: outcome.source,
    })
}

/// Embed every question up front.
pub fn embed_dataset(dataset: &Dataset, embedder: &Embedder) -> Result<Vec<Vec<f64>>> {
    dataset
        .pairs()
        .iter()
        .map(|p| embedder.embed(p).map(|e| e.values().to_vec()))
        .collect()
}

/// Run the full training loop.
///
/// `observer` sees the parameters before every step (so `Θ_0 … Θ_{K−1}`).
pub fn train(
    params: PolicyParams,
    dataset: &Dataset,
    contexts: &[Vec<f64>],
    space: &ActionSpace,
    env: &mut dyn Environment,
    config: &TrainConfig,
    mut observer: Option<&mut dyn FnMut(usize, &PolicyParams)>,
) -> Result<TrainReport, TrainFailure> {
    let total = dataset.len() * config.trials_per_question;
    let annealer = config.annealer(Some(total));
    let fail = |error: Error, report: TrainReport| TrainFailure {
        error,
        partial: Box::new(report),
    };
    let mut report = TrainReport::empty(params, annealer);
    if let Err(e) = config.validate() {
        return Err(fail(e, report));
    }
    if dataset.is_empty() {
        return Err(fail(Error::validation("dataset is empty"), report));
    }
    if contexts.len() != dataset.len() {
        return Err(fail(
            Error::validation("one context per question is required"),
            report,
        ));
    }
    if report.final_params.sizes() != space.sizes() {
        return Err(fail(
            Error::validation("policy heads do not match the action space"),
            report,
        ));
    }

    let mut order: Vec<usize> = (0..dataset.len()).collect();
    if let Some(s) = config.shuffle {
        order.shuffle(&mut seed::rng(s, seed::SHUFFLE));
    }
    let mut rng = seed::rng(config.seed, seed::SAMPLING);
    let mut params = std::mem::replace(&mut report.final_params, PolicyParams {
        shared: crate::policy::Dense::zeros(0, 0),
        heads: Default::default(),
    });
    let mut step = 0;
    for &qi in &order {
        let pair = &dataset.pairs()[qi];
        for _ in 0..config.trials_per_question {
            if let Some(obs) = observer.as_mut() {
                obs(step, &params);
            }
            let input = TrialInput {
                pair,
                context: &contexts[qi],
                space,
                step,
                tau: annealer.tau(step),
            };
            match reinforce_step(&mut params, &input, env, config, &mut rng) {
                Ok(t) => report.push(t),
                Err(e) => {
                    report.final_params = params;
                    return Err(fail(e, report));
                }
            }
            step += 1;
        }
    }
    report.final_params = params;
    Ok(report)
}

/// Monte-Carlo estimate of `J(Θ)`: mean reward over `n_samples` draws at
/// temperature `tau` for every probe question.
pub fn estimate_objective<R: Rng + ?Sized>(
    params: &PolicyParams,
    env: &mut dyn Environment,
    probe: &[(QaPair, Vec<f64>)],
    space: &ActionSpace,
    n_samples: usize,
    tau: f64,
    rng: &mut R,
) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::validation("n_samples must be at least 1"));
    }
    if probe.is_empty() {
        return Err(Error::validation("probe set is empty"));
    }
    let mut mean = 0.0;
    let mut count = 0.0;
    for (pair, context) in probe {
        for _ in 0..n_samples {
            let triple = params.sample(context, tau, rng)?.triple;
            let r = env.reward(pair, &triple, &space.resolve(&triple)?)?.reward;
            count += 1.0;
            mean += (r - mean) / count;
        }
    }
    Ok(mean)
}

/// Greedy triple for each context.
pub fn greedy_all(params: &PolicyParams, contexts: &[Vec<f64>]) -> Result<Vec<ActionTriple>> {
    contexts.iter().map(|c| params.greedy(c)).collect()
}

/// Per-axis log-probabilities as a map-friendly tuple.
pub fn axis_log_probs(t: &Transition) -> [(Axis, f64); 3] {
    [0, 1, 2].map(|s| (Axis::ALL[s], t.log_probs[s]))
}
