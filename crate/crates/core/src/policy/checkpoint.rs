//! JSON checkpoint: format tag, action space, embedder settings, every
//! weight, and free-form training metadata.
//!
//! Weights are written with shortest round-trip formatting and parsed with
//! exact float parsing, so `load(save(x))` restores parameters bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dense, PolicyParams};
use crate::embed::EmbedderConfig;
use crate::error::{read_to_string, write_file, Error, Result};
use crate::space::{ActionSpace, Axis};

pub const CHECKPOINT_VERSION: &str = "confbandit-ckpt-1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub space: ActionSpace,
    pub params: PolicyParams,
    pub embedder: EmbedderConfig,
    pub metadata: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct HeadsDoc {
    instruction: Vec<Dense>,
    temperature: Vec<Dense>,
    steps: Vec<Dense>,
}

#[derive(Serialize, Deserialize)]
struct PolicyDoc {
    shared: Dense,
    heads: HeadsDoc,
}

#[derive(Serialize, Deserialize)]
struct CheckpointDoc {
    format: String,
    space: ActionSpace,
    embedder: EmbedderConfig,
    policy: PolicyDoc,
    #[serde(default)]
    metadata: serde_json::Value,
}

fn check_layer(name: &str, layer: &Dense) -> Result<()> {
    if layer.inputs == 0 || layer.outputs == 0 {
        return Err(Error::Checkpoint(format!("{name}: zero-width layer")));
    }
    if layer.weights.len() != layer.inputs * layer.outputs || layer.bias.len() != layer.outputs {
        return Err(Error::Checkpoint(format!(
            "{name}: expected {}x{} weights and {} biases, found {} and {}",
            layer.outputs,
            layer.inputs,
            layer.outputs,
            layer.weights.len(),
            layer.bias.len()
        )));
    }
    if layer.values().any(|v| !v.is_finite()) {
        return Err(Error::Checkpoint(format!("{name}: non-finite weight")));
    }
    Ok(())
}

impl Checkpoint {
    pub fn new(
        space: ActionSpace,
        params: PolicyParams,
        embedder: EmbedderConfig,
        metadata: serde_json::Value,
    ) -> Result<Self> {
        let ckpt = Self {
            space,
            params,
            embedder,
            metadata,
        };
        ckpt.validate()?;
        Ok(ckpt)
    }

    fn validate(&self) -> Result<()> {
        let p = &self.params;
        check_layer("shared", &p.shared)?;
        if p.input_width() != self.embedder.width() {
            return Err(Error::Checkpoint(format!(
                "policy input width {} != embedder width {}",
                p.input_width(),
                self.embedder.width()
            )));
        }
        for axis in Axis::ALL {
            let head = p.head(axis);
            if head.is_empty() {
                return Err(Error::Checkpoint(format!("{axis} head has no layers")));
            }
            let mut prev = p.hidden_width();
            for (i, layer) in head.iter().enumerate() {
                let name = format!("{axis} head layer {i}");
                check_layer(&name, layer)?;
                if layer.inputs != prev {
                    return Err(Error::Checkpoint(format!(
                        "{name}: input width {} does not match previous output {prev}",
                        layer.inputs
                    )));
                }
                prev = layer.outputs;
            }
            if prev != self.space.axis_len(axis) {
                return Err(Error::Checkpoint(format!(
                    "{axis} head has {prev} outputs but the space has {} values",
                    self.space.axis_len(axis)
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let [instruction, temperature, steps] = self.params.heads.clone();
        let doc = CheckpointDoc {
            format: CHECKPOINT_VERSION.to_string(),
            space: self.space.clone(),
            embedder: self.embedder.clone(),
            policy: PolicyDoc {
                shared: self.params.shared.clone(),
                heads: HeadsDoc {
                    instruction,
                    temperature,
                    steps,
                },
            },
            metadata: self.metadata.clone(),
        };
        if !self.params.is_finite() {
            return Err(Error::Checkpoint("refusing to save non-finite weights".into()));
        }
        serde_json::to_string(&doc).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(format!("parse: {e}")))?;
        match value.get("format").and_then(|f| f.as_str()) {
            Some(CHECKPOINT_VERSION) => {}
            Some(other) => {
                return Err(Error::Checkpoint(format!(
                    "unsupported format {other:?}, expected {CHECKPOINT_VERSION:?}"
                )))
            }
            None => return Err(Error::Checkpoint("missing format tag".into())),
        }
        let doc: CheckpointDoc =
            serde_json::from_value(value).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let params = PolicyParams {
            shared: doc.policy.shared,
            heads: [
                doc.policy.heads.instruction,
                doc.policy.heads.temperature,
                doc.policy.heads.steps,
            ],
        };
        Self::new(doc.space, params, doc.embedder, doc.metadata)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_json()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_to_string(path)?)
    }
}
