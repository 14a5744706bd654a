//! Simulated environment with a known mean-reward table per context bucket.
//!
//! Questions are assigned to one of `B` buckets by hashing their id. Every
//! bucket has its own mean table over the joint action grid, so the optimal
//! configuration depends on the question and the policy has to use its
//! context to find it. Synthetic questions draw most of their words from a
//! bucket-specific vocabulary, which gives the embedding something to key on.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh64::xxh64;

use super::{Environment, RewardOutcome, RewardSource};
use crate::dataset::{Dataset, QaPair};
use crate::error::{Error, Result};
use crate::seed;
use crate::space::{ActionTriple, AxisSizes, RenderedConfig};

const BUCKET_SEED: u64 = 0x5eed_b0c4;

/// Noise is drawn from N(0, σ²) restricted to ±3σ.
const NOISE_TRUNCATION: f64 = 3.0;

/// Context bucket of a question id.
pub fn bucket_of(id: &str, buckets: usize) -> usize {
    (xxh64(id.as_bytes(), BUCKET_SEED) % buckets as u64) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    /// One dominant triple per bucket at `dominant_reward`; every other
    /// triple earns `other_max / 2` for each axis it shares with it.
    Dominant,
    /// Sum of independent per-axis utilities with a planted best value on
    /// each axis.
    Additive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub buckets: usize,
    pub seed: u64,
    pub noise_sigma: f64,
    pub table: TableKind,
    pub dominant_reward: f64,
    pub other_max: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            buckets: 4,
            seed: 0,
            noise_sigma: 0.05,
            table: TableKind::Dominant,
            dominant_reward: 1.0,
            other_max: 0.5,
        }
    }
}

/// Mean tables and their exhaustive optima.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    sizes: AxisSizes,
    noise_sigma: f64,
    /// One flat-indexed table per bucket.
    tables: Vec<Vec<f64>>,
    optima: Vec<ActionTriple>,
}

impl SimSpec {
    /// Build from explicit tables; optima are recomputed by exhaustive scan.
    pub fn from_tables(sizes: AxisSizes, tables: Vec<Vec<f64>>, noise_sigma: f64) -> Result<Self> {
        if tables.is_empty() {
            return Err(Error::validation("simulator needs at least one bucket"));
        }
        if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
            return Err(Error::validation("noise_sigma must be finite and non-negative"));
        }
        for (b, table) in tables.iter().enumerate() {
            if table.len() != sizes.cardinality() {
                return Err(Error::validation(format!(
                    "bucket {b}: table has {} entries, grid has {}",
                    table.len(),
                    sizes.cardinality()
                )));
            }
            if table.iter().any(|m| !(0.0..=1.0).contains(m)) {
                return Err(Error::validation(format!("bucket {b}: mean outside [0, 1]")));
            }
        }
        let optima = tables
            .iter()
            .map(|t| sizes.triple_at(crate::policy::argmax(t)))
            .collect::<Result<_>>()?;
        Ok(Self {
            sizes,
            noise_sigma,
            tables,
            optima,
        })
    }

    /// Seeded table generator.
    pub fn generate(sizes: AxisSizes, config: &SimConfig) -> Result<Self> {
        if config.buckets == 0 {
            return Err(Error::validation("buckets must be positive"));
        }
        if config.buckets > sizes.cardinality() {
            return Err(Error::validation("more buckets than joint actions"));
        }
        if !(0.0..=1.0).contains(&config.other_max)
            || !(0.0..=1.0).contains(&config.dominant_reward)
            || config.other_max >= config.dominant_reward
        {
            return Err(Error::validation(
                "need 0 <= other_max < dominant_reward <= 1",
            ));
        }
        let mut rng = seed::rng(config.seed, seed::SIM_TABLE);
        let mut optima: Vec<ActionTriple> = Vec::with_capacity(config.buckets);
        while optima.len() < config.buckets {
            let t = ActionTriple::from_array(sizes.0.map(|n| rng.random_range(0..n)));
            if !optima.contains(&t) {
                optima.push(t);
            }
        }
        let tables = optima
            .iter()
            .map(|best| match config.table {
                TableKind::Dominant => Self::dominant_table(sizes, best, config),
                TableKind::Additive => Self::additive_table(sizes, best, &mut rng),
            })
            .collect();
        Self::from_tables(sizes, tables, config.noise_sigma)
    }

    fn dominant_table(sizes: AxisSizes, best: &ActionTriple, config: &SimConfig) -> Vec<f64> {
        let axes = best.as_array();
        sizes
            .triples()
            .map(|t| {
                if t == *best {
                    return config.dominant_reward;
                }
                let shared = t.as_array().iter().zip(&axes).filter(|(a, b)| a == b).count();
                config.other_max * shared as f64 / 2.0
            })
            .collect()
    }

    fn additive_table(sizes: AxisSizes, best: &ActionTriple, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let utils: [Vec<f64>; 3] = [0, 1, 2].map(|slot| {
            let best_i = best.as_array()[slot];
            (0..sizes.0[slot])
                .map(|i| if i == best_i { 1.0 } else { rng.random_range(0.0..0.7) })
                .collect()
        });
        sizes
            .triples()
            .map(|t| {
                let [p, tt, s] = t.as_array();
                (utils[0][p] + utils[1][tt] + utils[2][s]) / 3.0
            })
            .collect()
    }

    pub fn sizes(&self) -> AxisSizes {
        self.sizes
    }

    pub fn buckets(&self) -> usize {
        self.tables.len()
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn bucket_of(&self, question_id: &str) -> usize {
        bucket_of(question_id, self.buckets())
    }

    pub fn table(&self, bucket: usize) -> &[f64] {
        &self.tables[bucket]
    }

    pub fn mean(&self, bucket: usize, triple: &ActionTriple) -> Result<f64> {
        Ok(self.tables[bucket][self.sizes.flat_index(triple)?])
    }

    /// Exhaustive argmax of a bucket's table (lowest flat index on ties).
    pub fn optimum(&self, bucket: usize) -> ActionTriple {
        self.optima[bucket]
    }

    pub fn optimal_mean(&self, bucket: usize) -> f64 {
        let t = &self.tables[bucket];
        t[crate::policy::argmax(t)]
    }
}

/// Mean plus truncated Gaussian noise, clamped to `[0, 1]`.
pub fn sim_reward<R: Rng + ?Sized>(
    spec: &SimSpec,
    pair: &QaPair,
    triple: &ActionTriple,
    rng: &mut R,
) -> Result<RewardOutcome> {
    let mean = spec.mean(spec.bucket_of(&pair.id), triple)?;
    let noise = if spec.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sigma)
            .map_err(|e| Error::validation(format!("noise: {e}")))?;
        loop {
            let x: f64 = normal.sample(rng);
            if x.abs() <= NOISE_TRUNCATION * spec.noise_sigma {
                break x;
            }
        }
    } else {
        0.0
    };
    Ok(RewardOutcome {
        reward: (mean + noise).clamp(0.0, 1.0),
        raw_answer: None,
        latency_ms: 0,
        source: RewardSource::Sim,
    })
}

/// [`SimSpec`] plus its noise stream.
#[derive(Debug, Clone)]
pub struct SimEnvironment {
    spec: SimSpec,
    rng: ChaCha8Rng,
}

impl SimEnvironment {
    pub fn new(spec: SimSpec, seed_root: u64) -> Self {
        Self {
            spec,
            rng: seed::rng(seed_root, seed::SIM_NOISE),
        }
    }

    pub fn spec(&self) -> &SimSpec {
        &self.spec
    }
}

impl Environment for SimEnvironment {
    fn reward(
        &mut self,
        pair: &QaPair,
        triple: &ActionTriple,
        _config: &RenderedConfig,
    ) -> Result<RewardOutcome> {
        sim_reward(&self.spec, pair, triple, &mut self.rng)
    }

    fn sim_spec(&self) -> Option<&SimSpec> {
        Some(&self.spec)
    }
}

const TOPICS: [&[&str]; 4] = [
    &[
        "integer", "equation", "solve", "polynomial", "derivative", "fraction", "sum",
        "product", "prime", "root", "algebra", "matrix", "angle", "triangle", "probability",
        "variable",
    ],
    &[
        "metaphor", "sentence", "word", "figurative", "literal", "meaning", "poem",
        "phrase", "context", "highlighted", "imagery", "expression", "language", "sense",
        "symbol", "usage",
    ],
    &[
        "true", "myth", "misconception", "fact", "claim", "evidence", "history",
        "science", "belief", "popular", "actually", "health", "false", "common",
        "rumor", "origin",
    ],
    &[
        "premise", "argument", "conclusion", "inference", "assumption", "valid",
        "deduce", "statement", "logic", "implies", "contradiction", "option",
        "scenario", "reasoning", "weaken", "strengthen",
    ],
];

const FILLER: [&str; 12] = [
    "which", "of", "the", "following", "is", "what", "does", "given", "that", "best",
    "describes", "about",
];

fn topic_word(bucket: usize, j: usize) -> String {
    match TOPICS.get(bucket) {
        Some(words) => words[j % words.len()].to_string(),
        None => format!("topic{bucket}term{}", j % 16),
    }
}

/// `n` synthetic questions with ids `{prefix}-{i}`. Each question mixes six
/// words from its bucket's vocabulary with two filler words.
pub fn synthetic_dataset(n: usize, prefix: &str, buckets: usize, seed_root: u64) -> Result<Dataset> {
    if buckets == 0 {
        return Err(Error::validation("buckets must be positive"));
    }
    let mut rng = seed::rng(seed_root, &format!("dataset-{prefix}"));
    let pairs = (0..n)
        .map(|i| {
            let id = format!("{prefix}-{i}");
            let bucket = bucket_of(&id, buckets);
            let mut words: Vec<String> = (0..6)
                .map(|_| topic_word(bucket, rng.random_range(0..16)))
                .collect();
            for _ in 0..2 {
                let pos = rng.random_range(0..=words.len());
                let filler = FILLER.choose(&mut rng).copied().unwrap_or("the");
                words.insert(pos, filler.to_string());
            }
            let question = format!("{}?", words.join(" "));
            QaPair::new(id, question, format!("answer-{i}"))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(pairs)
}
