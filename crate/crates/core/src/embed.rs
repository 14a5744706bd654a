//! Question embeddings: the context vector the policy conditions on.
//!
//! Three sources are supported and all of them produce unit-norm vectors of
//! a fixed width, so the policy never needs to know where a vector came from:
//!
//! - a built-in signed feature-hashing embedder (words and character
//!   trigrams, xxh64 with a recorded seed),
//! - a precomputed file of `id<TAB>v1,v2,...` records,
//! - a remote endpoint answering `{"input": q}` with `{"embedding": [...]}`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh64::xxh64;

use crate::dataset::QaPair;
use crate::error::{read_to_string, Error, Result};
use crate::http::{JsonClient, RetryPolicy};

pub const DEFAULT_WIDTH: usize = 768;
pub const MIN_WIDTH: usize = 8;
pub const DEFAULT_HASH_SEED: u64 = 0x6366_6762_616e_6469;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingSource {
    Hashed,
    Precomputed,
    Remote,
}

/// Unit-norm context vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
    source: EmbeddingSource,
}

impl Embedding {
    /// Validate and L2-normalize raw values.
    pub fn from_raw(mut values: Vec<f64>, source: EmbeddingSource) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::format("embedding has no values"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::format("embedding contains a non-finite value"));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::format("embedding has zero norm"));
        }
        values.iter_mut().for_each(|v| *v /= norm);
        Ok(Self { values, source })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn width(&self) -> usize {
        self.values.len()
    }

    pub fn source(&self) -> EmbeddingSource {
        self.source
    }
}

fn hash_feature(feature: &[u8], seed: u64, width: usize, out: &mut [f64]) {
    let h = xxh64(feature, seed);
    let bucket = (h % width as u64) as usize;
    out[bucket] += if h >> 63 == 0 { 1.0 } else { -1.0 };
}

/// Signed feature hashing of lowercased whitespace tokens and their
/// boundary-marked character trigrams, followed by L2 normalization.
pub fn embed_hashed_with_seed(question: &str, width: usize, seed: u64) -> Result<Embedding> {
    if question.trim().is_empty() {
        return Err(Error::validation("question is empty"));
    }
    if width < MIN_WIDTH {
        return Err(Error::validation(format!(
            "embedding width {width} below minimum {MIN_WIDTH}"
        )));
    }
    let mut values = vec![0.0; width];
    let lowered = question.to_lowercase();
    for token in lowered.split_whitespace() {
        let word = format!("w:{token}");
        hash_feature(word.as_bytes(), seed, width, &mut values);

        let chars: Vec<char> = std::iter::once('<')
            .chain(token.chars())
            .chain(std::iter::once('>'))
            .collect();
        for gram in chars.windows(3) {
            let gram: String = std::iter::once('c').chain(gram.iter().copied()).collect();
            hash_feature(gram.as_bytes(), seed, width, &mut values);
        }
    }
    Embedding::from_raw(values, EmbeddingSource::Hashed)
}

pub fn embed_hashed(question: &str, width: usize) -> Result<Embedding> {
    embed_hashed_with_seed(question, width, DEFAULT_HASH_SEED)
}

/// Parse precomputed records. Every record must share one width.
pub fn parse_precomputed(text: &str) -> Result<BTreeMap<String, Embedding>> {
    let mut out = BTreeMap::new();
    let mut width = None;
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (id, rest) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(format!("line {lineno}: expected id<TAB>values")))?;
        if id.is_empty() {
            return Err(Error::format(format!("line {lineno}: empty id")));
        }
        let values = rest
            .split(',')
            .map(|v| {
                let x: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::format(format!("line {lineno}: bad number {v:?}")))?;
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(Error::format(format!("line {lineno}: non-finite value")))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(Error::format(format!(
                    "line {lineno}: width {} differs from {w}",
                    values.len()
                )))
            }
            Some(_) => {}
        }
        let embedding = Embedding::from_raw(values, EmbeddingSource::Precomputed)
            .map_err(|e| Error::format(format!("line {lineno}: {e}")))?;
        if out.insert(id.to_string(), embedding).is_some() {
            return Err(Error::format(format!("line {lineno}: duplicate id {id:?}")));
        }
    }
    Ok(out)
}

pub fn load_precomputed(path: &Path) -> Result<BTreeMap<String, Embedding>> {
    parse_precomputed(&read_to_string(path)?)
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    input: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    embedding: Vec<f64>,
}

/// Fetch an embedding from a remote service and normalize it.
pub fn embed_remote(client: &JsonClient, question: &str, width: usize) -> Result<Embedding> {
    if question.trim().is_empty() {
        return Err(Error::validation("question is empty"));
    }
    let reply: EmbedResponse = client.post(&EmbedRequest { input: question })?;
    if reply.embedding.len() != width {
        return Err(Error::format(format!(
            "remote embedding width {} != expected {width}",
            reply.embedding.len()
        )));
    }
    Embedding::from_raw(reply.embedding, EmbeddingSource::Remote)
}

/// How contexts are produced; stored in checkpoints so inference embeds
/// questions the same way training did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EmbedderConfig {
    Hashed { width: usize, seed: u64 },
    Precomputed { path: String, width: usize },
    Remote { url: String, width: usize },
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig::Hashed {
            width: DEFAULT_WIDTH,
            seed: DEFAULT_HASH_SEED,
        }
    }
}

impl EmbedderConfig {
    pub fn width(&self) -> usize {
        match self {
            EmbedderConfig::Hashed { width, .. }
            | EmbedderConfig::Precomputed { width, .. }
            | EmbedderConfig::Remote { width, .. } => *width,
        }
    }

    /// Instantiate. `bearer` is only used by the remote variant.
    pub fn build(&self, bearer: Option<String>) -> Result<Embedder> {
        Ok(match self {
            EmbedderConfig::Hashed { width, seed } => Embedder::Hashed {
                width: *width,
                seed: *seed,
            },
            EmbedderConfig::Precomputed { path, width } => {
                let table = load_precomputed(Path::new(path))?;
                if let Some(e) = table.values().next() {
                    if e.width() != *width {
                        return Err(Error::format(format!(
                            "precomputed width {} != configured {width}",
                            e.width()
                        )));
                    }
                }
                Embedder::Precomputed(table)
            }
            EmbedderConfig::Remote { url, width } => Embedder::Remote {
                client: JsonClient::new(url.clone(), bearer, RetryPolicy::default()),
                width: *width,
            },
        })
    }
}

/// A ready-to-use context source.
#[derive(Debug, Clone)]
pub enum Embedder {
    Hashed { width: usize, seed: u64 },
    Precomputed(BTreeMap<String, Embedding>),
    Remote { client: JsonClient, width: usize },
}

impl Embedder {
    pub fn hashed(width: usize) -> Self {
        Embedder::Hashed {
            width,
            seed: DEFAULT_HASH_SEED,
        }
    }

    /// Precomputed vectors are looked up by question id; the others embed
    /// the question text.
    pub fn embed(&self, pair: &QaPair) -> Result<Embedding> {
        match self {
            Embedder::Hashed { width, seed } => embed_hashed_with_seed(&pair.question, *width, *seed),
            Embedder::Precomputed(table) => table
                .get(&pair.id)
                .cloned()
                .ok_or_else(|| Error::validation(format!("no precomputed embedding for {:?}", pair.id))),
            Embedder::Remote { client, width } => embed_remote(client, &pair.question, *width),
        }
    }

    pub fn embed_text(&self, question: &str) -> Result<Embedding> {
        match self {
            Embedder::Hashed { width, seed } => embed_hashed_with_seed(question, *width, *seed),
            Embedder::Precomputed(table) => table
                .get(question)
                .cloned()
                .ok_or_else(|| Error::validation(format!("no precomputed embedding for {question:?}"))),
            Embedder::Remote { client, width } => embed_remote(client, question, *width),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn norm(e: &Embedding) -> f64 {
        e.values().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    #[test]
    fn hashed_is_unit_norm() {
        let e = embed_hashed("abc abc", 768).unwrap();
        assert_eq!(e.width(), 768);
        assert!((norm(&e) - 1.0).abs() < 1e-6);
        assert_eq!(e.source(), EmbeddingSource::Hashed);
    }

    #[test]
    fn hashed_is_deterministic() {
        let a = embed_hashed("What is 2 + 2?", 768).unwrap();
        let b = embed_hashed("What is 2 + 2?", 768).unwrap();
        let bits = |e: &Embedding| e.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn hashed_distinguishes_near_strings() {
        let a = embed_hashed("abc", 768).unwrap();
        let b = embed_hashed("abd", 768).unwrap();
        assert_ne!(a.values(), b.values());
    }

    #[test]
    fn hashed_lowercases() {
        assert_eq!(
            embed_hashed("Hello World", 64).unwrap(),
            embed_hashed("hello   world", 64).unwrap()
        );
    }

    #[test]
    fn hashed_rejects_bad_input() {
        assert!(matches!(embed_hashed("", 768), Err(Error::Validation(_))));
        assert!(matches!(embed_hashed(" \t", 768), Err(Error::Validation(_))));
        assert!(matches!(embed_hashed("abc", 4), Err(Error::Validation(_))));
    }

    #[test]
    fn precomputed_parses_and_normalizes() {
        let table = parse_precomputed("a\t3,4\n\nb\t0,2\n").unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table["a"].values(), &[0.6, 0.8]);
        assert_eq!(table["b"].values(), &[0.0, 1.0]);
        assert_eq!(table["a"].source(), EmbeddingSource::Precomputed);
    }

    #[test]
    fn precomputed_rejects_malformed() {
        assert!(matches!(parse_precomputed("a\t1,2\nb\t1,2,3\n"), Err(Error::Format(_))));
        assert!(matches!(parse_precomputed("a\t1,NaN\n"), Err(Error::Format(_))));
        assert!(matches!(parse_precomputed("a\t1,inf\n"), Err(Error::Format(_))));
        assert!(matches!(parse_precomputed("a 1,2\n"), Err(Error::Format(_))));
        assert!(matches!(parse_precomputed("a\t1,2\na\t1,2\n"), Err(Error::Format(_))));
        assert!(matches!(parse_precomputed("a\t0,0\n"), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn hashed_always_unit_norm(q in "[a-zA-Z0-9 ?]{1,60}", width in 8usize..300) {
            prop_assume!(!q.trim().is_empty());
            if let Ok(e) = embed_hashed(&q, width) {
                prop_assert_eq!(e.width(), width);
                prop_assert!((norm(&e) - 1.0).abs() < 1e-6);
            }
        }
    }
}
