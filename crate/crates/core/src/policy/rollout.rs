use serde::{Deserialize, Serialize};

use super::model::PolicyModel;
use crate::error::Result;
use crate::rng::derive_seed;
use crate::scene::{is_success, render, step, Action, CameraRig, TaskSetup};
use crate::synthesis::{extract_features_with, synthesize, MemoryBuffer, Observation, PipelineConfig};

const NOISE_STREAM: u64 = 0x4E01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub view_angle: f64,
    /// Post-memory hole fraction of the synthesized view, on planning steps
    /// of pipeline rollouts.
    pub hole_fraction: Option<f64>,
    pub action: Action,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub success: bool,
    pub steps: usize,
    pub seed: u64,
    pub log: Vec<StepLog>,
}

impl EpisodeResult {
    /// Mean post-memory hole fraction over planning steps, if any.
    pub fn mean_hole_fraction(&self) -> Option<f64> {
        let fr: Vec<f64> = self.log.iter().filter_map(|s| s.hole_fraction).collect();
        (!fr.is_empty()).then(|| fr.iter().sum::<f64>() / fr.len() as f64)
    }
}

/// One closed-loop episode on the scene sampled from `seed`, observed from
/// the camera at `theta` degrees. With `use_pipeline` the observation is
/// first re-rendered into the canonical view.
pub fn rollout(
    setup: &TaskSetup,
    rig: &CameraRig,
    model: &PolicyModel,
    theta: f64,
    use_pipeline: bool,
    seed: u64,
    pipeline: &PipelineConfig,
) -> Result<EpisodeResult> {
    let (mut scene, mut robot, task) = setup.sample(seed)?;
    let camera = rig.camera_at_angle(theta)?;
    let k = rig.intrinsics();
    let (depth_source, pose_source) = pipeline.providers.sources(derive_seed(seed, NOISE_STREAM));
    let per_plan = model.config().actions_per_plan();
    let mut memory = MemoryBuffer::new();
    let mut log = Vec::new();
    let mut t = 0;
    let mut success = is_success(&scene, &robot, &task);
    while !success && t < task.step_limit {
        let (image, depth) = render(&scene, &robot, &camera, k, &setup.sim);
        let (features, hole_fraction) = if use_pipeline {
            let obs = Observation {
                image,
                depth,
                camera,
                step: t as u64,
                gripper: Some(robot.gripper),
            };
            let out = synthesize(&obs, &depth_source, &pose_source, rig, &memory, pipeline)?;
            let hf = out.hole_fraction();
            memory = out.memory;
            (out.features, Some(hf))
        } else {
            (extract_features_with(&image, &pipeline.features)?, None)
        };
        let chunk = model.predict_chunk(&features, &robot)?;
        for (i, a) in chunk.actions().iter().take(per_plan).enumerate() {
            let a = a.clamped(setup.sim.max_step);
            (scene, robot) = step(&scene, &robot, &a, &setup.sim);
            log.push(StepLog {
                step: t,
                view_angle: theta,
                hole_fraction: if i == 0 { hole_fraction } else { None },
                action: a,
            });
            t += 1;
            success = is_success(&scene, &robot, &task);
            if success || t >= task.step_limit {
                break;
            }
        }
    }
    Ok(EpisodeResult {
        success,
        steps: t,
        seed,
        log,
    })
}
