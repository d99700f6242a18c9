use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, DatasetMeta};
use crate::error::{Error, Result};
use crate::scene::{Action, RobotState};
use crate::synthesis::FeatureVector;

pub const MODEL_MAGIC: &str = "CANONVIEW-POLICY 1";
const STATE_DIM: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    /// Chunk length `h`.
    pub horizon: usize,
    /// Weight `λ` of the proprioceptive state in the lookup key.
    pub state_weight: f64,
    /// Actions executed per prediction; `None` executes the whole chunk.
    pub replan_interval: Option<usize>,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            horizon: 8,
            state_weight: 0.5,
            replan_interval: None,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::invalid("policy horizon must be at least 1"));
        }
        if !(self.state_weight.is_finite() && self.state_weight >= 0.0) {
            return Err(Error::invalid("state_weight must be finite and non-negative"));
        }
        if self.replan_interval == Some(0) {
            return Err(Error::invalid("replan_interval must be at least 1"));
        }
        Ok(())
    }

    pub fn actions_per_plan(&self) -> usize {
        self.replan_interval.unwrap_or(self.horizon).min(self.horizon)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionChunk(Vec<Action>);

impl ActionChunk {
    pub fn actions(&self) -> &[Action] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Training step a reference key was built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Origin {
    pub episode: u32,
    pub step: u32,
}

/// Nearest-neighbour chunk lookup over `feature ⊕ λ·state` keys.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyModel {
    config: PolicyConfig,
    meta: DatasetMeta,
    feature_len: usize,
    keys: Vec<f64>,
    chunks: Vec<Action>,
    origins: Vec<Origin>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    config: PolicyConfig,
    dataset: DatasetMeta,
    feature_len: usize,
    state_dim: usize,
    entries: usize,
}

fn push_key(out: &mut Vec<f64>, f: &FeatureVector, s: &RobotState, weight: f64) {
    out.extend_from_slice(f.values());
    out.extend(s.to_vector().iter().map(|v| v * weight));
}

pub fn fit(dataset: &Dataset, config: &PolicyConfig) -> Result<PolicyModel> {
    config.validate()?;
    let h = config.horizon;
    let n = dataset.step_count();
    if n == 0 {
        return Err(Error::invalid("cannot fit a policy on an empty dataset"));
    }
    let feature_len = dataset.feature_len();
    let mut keys = Vec::with_capacity(n * (feature_len + STATE_DIM));
    let mut chunks = Vec::with_capacity(n * h);
    let mut origins = Vec::with_capacity(n);
    for (e, episode) in dataset.episodes().iter().enumerate() {
        for (i, step) in episode.iter().enumerate() {
            push_key(&mut keys, &step.features, &step.state, config.state_weight);
            let terminal = episode.last().expect("non-empty episode").action;
            chunks.extend((i..i + h).map(|j| episode.get(j).map_or(terminal, |s| s.action)));
            origins.push(Origin {
                episode: e as u32,
                step: i as u32,
            });
        }
    }
    Ok(PolicyModel {
        config: *config,
        meta: dataset.meta().clone(),
        feature_len,
        keys,
        chunks,
        origins,
    })
}

impl PolicyModel {
    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn feature_len(&self) -> usize {
        self.feature_len
    }

    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    pub fn origins(&self) -> &[Origin] {
        &self.origins
    }

    fn key_dim(&self) -> usize {
        self.feature_len + STATE_DIM
    }

    pub fn key(&self, index: usize) -> &[f64] {
        let d = self.key_dim();
        &self.keys[index * d..(index + 1) * d]
    }

    pub fn chunk(&self, index: usize) -> ActionChunk {
        let h = self.config.horizon;
        ActionChunk(self.chunks[index * h..(index + 1) * h].to_vec())
    }

    pub fn query_key(&self, f: &FeatureVector, s: &RobotState) -> Result<Vec<f64>> {
        if f.len() != self.feature_len {
            return Err(Error::invalid(format!(
                "feature length {} does not match the model's {}",
                f.len(),
                self.feature_len
            )));
        }
        let mut key = Vec::with_capacity(self.key_dim());
        push_key(&mut key, f, s, self.config.state_weight);
        Ok(key)
    }

    /// Index of the closest reference by squared Euclidean distance; the
    /// first reference wins ties, which is the lowest (episode, step).
    pub fn nearest(&self, key: &[f64]) -> Result<usize> {
        if key.len() != self.key_dim() {
            return Err(Error::invalid(format!(
                "key length {} does not match {}",
                key.len(),
                self.key_dim()
            )));
        }
        let mut best = (f64::INFINITY, 0);
        for (i, r) in self.keys.chunks_exact(key.len()).enumerate() {
            let d: f64 = r.iter().zip(key).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best.0 {
                best = (d, i);
            }
        }
        Ok(best.1)
    }

    pub fn predict_chunk(&self, f: &FeatureVector, s: &RobotState) -> Result<ActionChunk> {
        let key = self.query_key(f, s)?;
        Ok(self.chunk(self.nearest(&key)?))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            config: self.config,
            dataset: self.meta.clone(),
            feature_len: self.feature_len,
            state_dim: STATE_DIM,
            entries: self.len(),
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = format!("{MODEL_MAGIC}\n").into_bytes();
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for o in &self.origins {
            out.extend_from_slice(&o.episode.to_le_bytes());
            out.extend_from_slice(&o.step.to_le_bytes());
        }
        for v in &self.keys {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for a in &self.chunks {
            for v in a.delta.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
            out.push(a.grip as u8);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: String| Error::DegenerateData(format!("policy model: {m}"));
        let mut r = Reader { bytes, pos: 0 };
        let magic = format!("{MODEL_MAGIC}\n");
        if r.take(magic.len()).ok() != Some(magic.as_bytes()) {
            return Err(bad(format!("missing `{MODEL_MAGIC}` header")));
        }
        let len = r.u64()? as usize;
        let header: Header = serde_json::from_slice(r.take(len)?).map_err(|e| bad(e.to_string()))?;
        header.config.validate()?;
        if header.state_dim != STATE_DIM || header.entries == 0 {
            return Err(bad("unsupported state dimension or empty model".into()));
        }
        let n = header.entries;
        let mut origins = Vec::with_capacity(n);
        for _ in 0..n {
            origins.push(Origin {
                episode: r.u32()?,
                step: r.u32()?,
            });
        }
        let keys = (0..n * (header.feature_len + STATE_DIM))
            .map(|_| r.f64())
            .collect::<Result<Vec<_>>>()?;
        let mut chunks = Vec::with_capacity(n * header.config.horizon);
        for _ in 0..n * header.config.horizon {
            let delta = nalgebra::Vector3::new(r.f64()?, r.f64()?, r.f64()?);
            let grip = match r.take(1)?[0] {
                0 => false,
                1 => true,
                g => return Err(bad(format!("bad grip byte {g}"))),
            };
            chunks.push(Action { delta, grip });
        }
        if r.pos != bytes.len() {
            return Err(bad(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self {
            config: header.config,
            meta: header.dataset,
            feature_len: header.feature_len,
            keys,
            chunks,
            origins,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| Error::format(path, e.to_string()))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::DegenerateData("policy model: truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
