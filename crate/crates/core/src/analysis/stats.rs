use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{ActionSpace, ActionTriple, Axis};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSummary {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl AxisSummary {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count() as f64;
        let mean = values.clone().sum::<f64>() / n;
        let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionStats {
    pub decisions: usize,
    /// Selection counts per axis value, indexed like the space.
    pub instruction_histogram: Vec<u64>,
    pub temperature_histogram: Vec<u64>,
    pub steps_histogram: Vec<u64>,
    pub steps: AxisSummary,
    pub temperature: AxisSummary,
    /// `(instruction index, count)`, most frequent first, ties by index.
    pub top_instructions: Vec<(usize, u64)>,
}

impl ActionStats {
    pub fn histogram(&self, axis: Axis) -> &[u64] {
        match axis {
            Axis::Instruction => &self.instruction_histogram,
            Axis::Temperature => &self.temperature_histogram,
            Axis::Steps => &self.steps_histogram,
        }
    }
}

pub fn action_stats(triples: &[ActionTriple], space: &ActionSpace, top_n: usize) -> Result<ActionStats> {
    if triples.is_empty() {
        return Err(Error::validation("no decisions to summarize"));
    }
    let sizes = space.sizes();
    let mut hist = sizes.0.map(|n| vec![0u64; n]);
    for t in triples {
        sizes.check(t)?;
        for (slot, &i) in t.as_array().iter().enumerate() {
            hist[slot][i] += 1;
        }
    }
    let steps = AxisSummary::of(triples.iter().map(|t| f64::from(space.steps_values()[t.steps_index])));
    let temperature = AxisSummary::of(triples.iter().map(|t| space.temperature_values()[t.temperature_index]));
    let mut ranked: Vec<(usize, u64)> = hist[0].iter().copied().enumerate().filter(|&(_, c)| c > 0).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(top_n);
    let [instruction_histogram, temperature_histogram, steps_histogram] = hist;
    Ok(ActionStats {
        decisions: triples.len(),
        instruction_histogram,
        temperature_histogram,
        steps_histogram,
        steps,
        temperature,
        top_instructions: ranked,
    })
}
