use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use canonview::eval::BenchConfig;
use canonview::policy::PolicyConfig;
use canonview::scene::{RigConfig, TaskKind};
use canonview::synthesis::PipelineConfig;
use serde::{Deserialize, Serialize};

/// Experiment configuration read from a TOML file. Every key is optional;
/// command-line flags override file values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: TaskKind,
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    pub dataset: PathBuf,
    /// Defaults to `<out>/policy.cvp`.
    pub model: Option<PathBuf>,
    pub out: PathBuf,
    pub demos: usize,
    pub angles: Vec<f64>,
    pub baseline_angle: f64,
    pub trials: usize,
    pub nvs_scenes: usize,
    pub nvs_steps: usize,
    pub scatter_scenes: usize,
    pub scatter_angles: Vec<f64>,
    pub rig: RigConfig,
    pub policy: PolicyConfig,
    pub pipeline: PipelineConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let bench = BenchConfig::default();
        Self {
            task: TaskKind::Push,
            seed: 0,
            dataset: PathBuf::from("data"),
            model: None,
            out: PathBuf::from("out"),
            demos: 50,
            angles: bench.angles,
            baseline_angle: bench.baseline_angle,
            trials: bench.trials,
            nvs_scenes: bench.nvs_scenes,
            nvs_steps: bench.nvs_steps,
            scatter_scenes: bench.scatter_scenes,
            scatter_angles: bench.scatter_angles,
            rig: RigConfig::default(),
            policy: PolicyConfig::default(),
            pipeline: bench.pipeline,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.angles.is_empty() {
            bail!("angle list must not be empty");
        }
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        self.policy.validate()?;
        self.to_bench().validate()?;
        Ok(())
    }

    pub fn model_path(&self) -> PathBuf {
        self.model.clone().unwrap_or_else(|| self.out.join("policy.cvp"))
    }

    pub fn to_bench(&self) -> BenchConfig {
        BenchConfig {
            angles: self.angles.clone(),
            baseline_angle: self.baseline_angle,
            trials: self.trials,
            nvs_scenes: self.nvs_scenes,
            nvs_steps: self.nvs_steps,
            scatter_scenes: self.scatter_scenes,
            scatter_angles: self.scatter_angles.clone(),
            pipeline: self.pipeline.clone(),
        }
    }
}
