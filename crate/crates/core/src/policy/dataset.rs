use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{Action, DemoEpisode, RobotState, TaskKind};
use crate::synthesis::{extract_features_with, FeatureConfig, FeatureVector};

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub features: FeatureVector,
    pub state: RobotState,
    pub action: Action,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub task: TaskKind,
    pub seed: u64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    episodes: Vec<Vec<StepRecord>>,
    meta: DatasetMeta,
}

impl Dataset {
    pub fn new(episodes: Vec<Vec<StepRecord>>, meta: DatasetMeta) -> Result<Self> {
        if episodes.iter().all(Vec::is_empty) {
            return Err(Error::invalid("dataset has no steps"));
        }
        let len = episodes.iter().flatten().next().map(|s| s.features.len()).unwrap_or(0);
        if let Some(bad) = episodes.iter().flatten().find(|s| s.features.len() != len) {
            return Err(Error::invalid(format!(
                "feature length {} differs from {len} in the same dataset",
                bad.features.len()
            )));
        }
        Ok(Self { episodes, meta })
    }

    /// Describes every canonical frame of `demos` with `features`.
    pub fn from_demos(demos: &[DemoEpisode], features: &FeatureConfig, meta: DatasetMeta) -> Result<Self> {
        let episodes = demos
            .par_iter()
            .map(|ep| {
                ep.steps
                    .iter()
                    .map(|s| {
                        Ok(StepRecord {
                            features: extract_features_with(&s.image, features)?,
                            state: s.state.clone(),
                            action: s.action,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(episodes, meta)
    }

    pub fn episodes(&self) -> &[Vec<StepRecord>] {
        &self.episodes
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn feature_len(&self) -> usize {
        self.episodes.iter().flatten().next().map_or(0, |s| s.features.len())
    }

    pub fn step_count(&self) -> usize {
        self.episodes.iter().map(Vec::len).sum()
    }
}
