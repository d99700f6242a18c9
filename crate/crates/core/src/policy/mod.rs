//! Nearest-neighbour behaviour cloning with action chunks, and the
//! closed-loop rollout driver.

mod dataset;
mod model;
mod rollout;

pub use dataset::{Dataset, DatasetMeta, StepRecord};
pub use model::{fit, ActionChunk, Origin, PolicyConfig, PolicyModel, MODEL_MAGIC};
pub use rollout::{rollout, EpisodeResult, StepLog};
