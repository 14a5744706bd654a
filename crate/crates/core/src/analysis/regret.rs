use serde::{Deserialize, Serialize};

use crate::env::{RewardSource, SimSpec};
use crate::error::{Error, Result};
use crate::trainer::Transition;

/// Mean doubling ratio at or below which cumulative regret counts as sublinear.
pub const SUBLINEAR_RATIO: f64 = 1.6;
const MIN_STEPS: usize = 1000;
const MIN_DOUBLINGS: usize = 3;
const MAX_DOUBLINGS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    /// `μ(a*) − μ(a_k)` from the noiseless table.
    pub instantaneous: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// Pull count per flat joint index.
    pub pulls: Vec<u64>,
    pub arms: usize,
}

impl RegretTrace {
    pub fn from_instantaneous(instantaneous: Vec<f64>, arms: usize) -> Self {
        let cumulative = instantaneous
            .iter()
            .scan(0.0, |acc, d| {
                *acc += d;
                Some(*acc)
            })
            .collect();
        Self {
            instantaneous,
            cumulative,
            pulls: vec![0; arms],
            arms,
        }
    }

    pub fn steps(&self) -> usize {
        self.instantaneous.len()
    }

    /// `R(k)` for the first `k` steps.
    pub fn at(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

pub fn compute_regret(transitions: &[Transition], spec: &SimSpec) -> Result<RegretTrace> {
    let sizes = spec.sizes();
    let mut trace = RegretTrace::from_instantaneous(Vec::new(), sizes.cardinality());
    let mut acc = 0.0;
    for t in transitions {
        if t.source != RewardSource::Sim {
            return Err(Error::Unsupported(format!(
                "regret needs a mean table; step {} came from {}",
                t.step,
                t.source.name()
            )));
        }
        let bucket = spec.bucket_of(&t.question_id);
        let delta = spec.optimal_mean(bucket) - spec.mean(bucket, &t.triple)?;
        acc += delta;
        trace.instantaneous.push(delta);
        trace.cumulative.push(acc);
        trace.pulls[sizes.flat_index(&t.triple)?] += 1;
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SublinearityReport {
    /// Prefix lengths, shortest first; each is half the next.
    pub prefixes: Vec<usize>,
    pub regrets: Vec<f64>,
    /// `R(2k) / R(k)` for consecutive prefixes.
    pub ratios: Vec<f64>,
    pub mean_ratio: f64,
    /// Least-squares `c` in `R(k) ≈ c·√(k·|A|·ln|A|)` over the prefixes.
    pub fitted_c: f64,
    pub sublinear: bool,
}

fn doubling_ratio(small: f64, large: f64) -> f64 {
    if small > 0.0 {
        large / small
    } else if large > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

/// Growth shape of cumulative regret over the tail doublings of the trace.
pub fn sublinearity_check(trace: &RegretTrace) -> Result<SublinearityReport> {
    let k = trace.steps();
    if k < MIN_STEPS {
        return Err(Error::validation(format!(
            "sublinearity check needs at least {MIN_STEPS} steps, trace has {k}"
        )));
    }
    let mut prefixes = vec![k];
    while prefixes.len() <= MAX_DOUBLINGS && prefixes[prefixes.len() - 1] / 2 >= MIN_STEPS / 8 {
        let next = prefixes[prefixes.len() - 1] / 2;
        prefixes.push(next);
    }
    prefixes.reverse();
    debug_assert!(prefixes.len() > MIN_DOUBLINGS);
    let regrets: Vec<f64> = prefixes.iter().map(|&p| trace.at(p)).collect();
    let ratios: Vec<f64> = regrets.windows(2).map(|w| doubling_ratio(w[0], w[1])).collect();
    let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;

    let arms = trace.arms as f64;
    let scale = |p: usize| (p as f64 * arms * arms.ln()).sqrt();
    let num: f64 = prefixes.iter().zip(&regrets).map(|(&p, r)| r * scale(p)).sum();
    let den: f64 = prefixes.iter().map(|&p| scale(p).powi(2)).sum();
    let fitted_c = if den > 0.0 { num / den } else { 0.0 };

    Ok(SublinearityReport {
        sublinear: mean_ratio <= SUBLINEAR_RATIO,
        prefixes,
        regrets,
        ratios,
        mean_ratio,
        fitted_c,
    })
}
