//! Question/reference pairs and the JSONL dataset format.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaPair {
    pub id: String,
    pub question: String,
    pub reference: String,
}

impl QaPair {
    pub fn new(
        id: impl Into<String>,
        question: impl Into<String>,
        reference: impl Into<String>,
    ) -> Result<Self> {
        let pair = Self {
            id: id.into(),
            question: question.into(),
            reference: reference.into(),
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("id", &self.id),
            ("question", &self.question),
            ("reference", &self.reference),
        ] {
            if value.trim().is_empty() {
                return Err(Error::validation(format!("{name} is empty")));
            }
        }
        Ok(())
    }
}

/// Ordered pairs with unique ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pairs: Vec<QaPair>,
}

impl Dataset {
    pub fn new(pairs: Vec<QaPair>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for pair in &pairs {
            pair.validate()
                .map_err(|e| Error::validation(format!("record {:?}: {e}", pair.id)))?;
            if !seen.insert(pair.id.as_str()) {
                return Err(Error::validation(format!("duplicate id {:?}", pair.id)));
            }
        }
        Ok(Self { pairs })
    }

    /// One JSON object per line with keys `id`, `question`, `reference`.
    pub fn parse_jsonl(text: &str) -> Result<Self> {
        let pairs = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, line)| {
                serde_json::from_str::<QaPair>(line)
                    .map_err(|e| Error::format(format!("dataset line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pairs)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_jsonl(&read_to_string(path)?)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for pair in &self.pairs {
            // QaPair has only string fields; serialization cannot fail.
            out.push_str(&serde_json::to_string(pair).expect("serialize QaPair"));
            out.push('\n');
        }
        out
    }

    pub fn pairs(&self) -> &[QaPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}
