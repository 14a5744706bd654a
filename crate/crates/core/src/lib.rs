//! Contextual bandit that picks an instruction, sampling temperature, and
//! reasoning-step budget per question, trained with REINFORCE.

pub mod analysis;
pub mod cli;
pub mod dataset;
pub mod embed;
pub mod env;
pub mod error;
pub mod http;
pub mod policy;
pub mod prompts;
pub mod seed;
pub mod space;
pub mod trainer;

pub use dataset::{Dataset, QaPair};
pub use embed::{Embedder, EmbedderConfig, Embedding};
pub use env::{Environment, RewardOutcome, RewardSource};
pub use error::{Error, Result};
pub use policy::{Checkpoint, PolicyParams, PolicyShape};
pub use space::{ActionSpace, ActionTriple, Axis, AxisSizes, RenderedConfig};
pub use trainer::{train, TrainConfig, TrainReport, Transition};
