use log::warn;
use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dynamics::step;
use super::render::render;
use super::rig::CameraRig;
use super::task::{expert_action, is_success, TaskSetup, TaskSpec};
use super::world::{Action, RobotState, Scene};
use crate::error::{Error, Result};
use crate::geometry::{DepthMap, ImageRGB};
use crate::rng::derive_seed;

/// Attempts allowed per requested episode before collection gives up.
const MAX_ATTEMPTS_PER_EPISODE: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct DemoStep {
    pub image: ImageRGB,
    pub depth: DepthMap,
    pub state: RobotState,
    pub action: Action,
    pub target_center: Vector3<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemoEpisode {
    pub index: usize,
    pub seed: u64,
    pub task: TaskSpec,
    pub success: bool,
    pub steps: Vec<DemoStep>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoSummary {
    pub episodes: usize,
    pub steps: usize,
    pub discarded: usize,
}

/// Expert trajectory without observations.
struct Trace {
    task: TaskSpec,
    worlds: Vec<(Scene, RobotState)>,
    actions: Vec<Action>,
    success: bool,
}

fn trace_expert(setup: &TaskSetup, seed: u64) -> Result<Trace> {
    let (mut scene, mut robot, task) = setup.sample(seed)?;
    let mut worlds = Vec::new();
    let mut actions = Vec::new();
    let mut success = false;
    for _ in 0..task.step_limit {
        if is_success(&scene, &robot, &task) {
            success = true;
            break;
        }
        let a = expert_action(&scene, &robot, &task, &setup.sim)?;
        worlds.push((scene.clone(), robot.clone()));
        actions.push(a);
        (scene, robot) = step(&scene, &robot, &a, &setup.sim);
    }
    success |= is_success(&scene, &robot, &task);
    Ok(Trace {
        task,
        worlds,
        actions,
        success,
    })
}

/// Collects `count` successful expert episodes rendered from the canonical
/// camera, handing each to `sink` in order. Failed expert runs are logged,
/// discarded and re-sampled with the next derived seed.
pub fn collect_demos_with(
    setup: &TaskSetup,
    rig: &CameraRig,
    count: usize,
    seed: u64,
    mut sink: impl FnMut(DemoEpisode) -> Result<()>,
) -> Result<DemoSummary> {
    if count == 0 {
        return Err(Error::invalid("demo count must be at least 1"));
    }
    let mut attempt = 0u64;
    let mut summary = DemoSummary {
        episodes: 0,
        steps: 0,
        discarded: 0,
    };
    while summary.episodes < count {
        if attempt as usize >= count * MAX_ATTEMPTS_PER_EPISODE {
            return Err(Error::Infeasible(format!(
                "expert produced only {} successful episodes in {attempt} attempts",
                summary.episodes
            )));
        }
        let episode_seed = derive_seed(seed, attempt);
        attempt += 1;
        let trace = trace_expert(setup, episode_seed)?;
        if !trace.success {
            warn!("discarding failed expert episode (seed {episode_seed})");
            summary.discarded += 1;
            continue;
        }
        let camera = rig.canonical();
        let k = rig.intrinsics();
        let steps: Vec<DemoStep> = trace
            .worlds
            .par_iter()
            .zip(trace.actions.par_iter())
            .map(|((scene, robot), action)| {
                let (image, depth) = render(scene, robot, camera, k, &setup.sim);
                let target_center = scene
                    .object(trace.task.target)
                    .map(|o| o.center)
                    .unwrap_or_else(Vector3::zeros);
                DemoStep {
                    image,
                    depth,
                    state: robot.clone(),
                    action: *action,
                    target_center,
                }
            })
            .collect();
        summary.steps += steps.len();
        sink(DemoEpisode {
            index: summary.episodes,
            seed: episode_seed,
            task: trace.task,
            success: true,
            steps,
        })?;
        summary.episodes += 1;
    }
    Ok(summary)
}

pub fn collect_demos(setup: &TaskSetup, rig: &CameraRig, count: usize, seed: u64) -> Result<Vec<DemoEpisode>> {
    let mut out = Vec::with_capacity(count);
    collect_demos_with(setup, rig, count, seed, |e| {
        out.push(e);
        Ok(())
    })?;
    Ok(out)
}
