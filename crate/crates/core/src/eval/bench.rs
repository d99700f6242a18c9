use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::image::{co_visible, psnr, ssim, MaskPolicy, NvsMetrics, CO_VISIBLE_TOLERANCE};
use super::pca::{pca_scatter, FeatureScatter};
use super::vgs::{vgs_report, Cell, SuccessTable, VgsReport};
use crate::error::{Error, Result};
use crate::policy::{rollout, EpisodeResult, PolicyModel};
use crate::rng::derive_seed;
use crate::scene::{expert_action, render, step, CameraRig, TaskSetup};
use crate::synthesis::{
    extract_features_with, synthesize, DepthSource, FeatureVector, MemoryBuffer, Observation, PipelineConfig,
    PoseSource,
};

const DEMO_STREAM: u64 = 1;
const TRIAL_STREAM: u64 = 2;
const NVS_STREAM: u64 = 0x4E55;
const SCATTER_STREAM: u64 = 0x5CA7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    Raw,
    Pipeline,
}

impl Setting {
    pub const ALL: [Setting; 2] = [Setting::Raw, Setting::Pipeline];

    pub fn name(&self) -> &'static str {
        match self {
            Setting::Raw => "raw",
            Setting::Pipeline => "pipeline",
        }
    }

    pub fn uses_pipeline(&self) -> bool {
        *self == Setting::Pipeline
    }
}

impl std::str::FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Setting::Raw),
            "pipeline" => Ok(Setting::Pipeline),
            other => Err(Error::invalid(format!("unknown setting `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Novel view angles in degrees.
    pub angles: Vec<f64>,
    pub baseline_angle: f64,
    /// Rollouts per (setting, angle) cell.
    pub trials: usize,
    /// Scenes per angle for the view-synthesis quality metrics.
    pub nvs_scenes: usize,
    /// Expert steps played before a quality frame is scored; the pipeline
    /// runs on every replanning step before it so memory is populated.
    pub nvs_steps: usize,
    pub scatter_scenes: usize,
    pub scatter_angles: Vec<f64>,
    pub pipeline: PipelineConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            angles: vec![-45.0, -30.0, 30.0, 45.0],
            baseline_angle: 0.0,
            trials: 25,
            nvs_scenes: 20,
            nvs_steps: 16,
            scatter_scenes: 20,
            scatter_angles: vec![-45.0, 45.0],
            pipeline: PipelineConfig::default(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.angles.is_empty() {
            return Err(Error::invalid("angle list must not be empty"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.angles.contains(&self.baseline_angle) {
            return Err(Error::invalid("baseline angle must not repeat in the novel angle list"));
        }
        for a in self
            .angles
            .iter()
            .chain(&self.scatter_angles)
            .chain(std::iter::once(&self.baseline_angle))
        {
            if !(*a > -180.0 && *a <= 180.0) {
                return Err(Error::invalid(format!("view angle {a} outside (-180, 180]")));
            }
        }
        self.pipeline.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NvsRow {
    pub angle: f64,
    pub metrics: NvsMetrics,
}

/// Mean quality of one angle over several scenes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NvsComparison {
    pub angle: f64,
    /// Pipeline output against the canonical ground truth, co-visible pixels.
    pub pipeline_co_visible: f64,
    /// Pipeline output against the canonical ground truth, all pixels.
    pub pipeline_full: f64,
    /// Bare warp (holes left black) against the canonical ground truth.
    pub warp_full: f64,
    /// Untouched novel view against the canonical ground truth.
    pub raw_full: f64,
    pub ssim: f64,
    pub co_visible_pixels: usize,
    pub total_pixels: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub seed: u64,
    pub tables: Vec<(Setting, SuccessTable)>,
    pub vgs: Vec<(Setting, VgsReport)>,
    pub nvs: Vec<NvsComparison>,
    pub scatter: FeatureScatter,
    pub episodes: Vec<(Setting, f64, EpisodeResult)>,
}

impl BenchReport {
    pub fn vgs_of(&self, setting: Setting) -> Option<f64> {
        self.vgs.iter().find(|(s, _)| *s == setting).map(|(_, r)| r.vgs)
    }

    pub fn table_of(&self, setting: Setting) -> Option<&SuccessTable> {
        self.tables.iter().find(|(s, _)| *s == setting).map(|(_, t)| t)
    }

    /// Mean post-memory hole fraction over every planning step of the
    /// pipeline rollouts at novel angles.
    pub fn mean_hole_fraction(&self, baseline_angle: f64) -> Option<f64> {
        let fr: Vec<f64> = self
            .episodes
            .iter()
            .filter(|(s, a, _)| s.uses_pipeline() && *a != baseline_angle)
            .flat_map(|(_, _, e)| e.log.iter().filter_map(|l| l.hole_fraction))
            .collect();
        (!fr.is_empty()).then(|| fr.iter().sum::<f64>() / fr.len() as f64)
    }

    pub fn nvs_rows(&self) -> Vec<NvsRow> {
        self.nvs
            .iter()
            .flat_map(|c| {
                [
                    NvsRow {
                        angle: c.angle,
                        metrics: NvsMetrics {
                            psnr: c.pipeline_co_visible,
                            ssim: c.ssim,
                            pixels: c.co_visible_pixels,
                            mask_policy: MaskPolicy::CoVisible,
                        },
                    },
                    NvsRow {
                        angle: c.angle,
                        metrics: NvsMetrics {
                            psnr: c.pipeline_full,
                            ssim: c.ssim,
                            pixels: c.total_pixels,
                            mask_policy: MaskPolicy::Full,
                        },
                    },
                ]
            })
            .collect()
    }
}

/// Seed handed to demonstration collection for a master seed.
pub fn demo_seed(master: u64) -> u64 {
    derive_seed(master, DEMO_STREAM)
}

/// Seed of trial `i`, shared by every angle and setting so cells are paired.
pub fn trial_seed(master: u64, i: usize) -> u64 {
    derive_seed(derive_seed(master, TRIAL_STREAM), i as u64)
}

pub fn run_benchmark(
    setup: &TaskSetup,
    rig: &CameraRig,
    model: &PolicyModel,
    config: &BenchConfig,
    seed: u64,
) -> Result<BenchReport> {
    config.validate()?;
    if model.meta().task != setup.kind {
        return Err(Error::invalid(format!(
            "model was fitted on task `{}`, benchmark runs `{}`",
            model.meta().task.name(),
            setup.kind.name()
        )));
    }
    let angles: Vec<f64> = std::iter::once(config.baseline_angle)
        .chain(config.angles.iter().copied())
        .collect();
    let cells: Vec<(Setting, f64, usize)> = Setting::ALL
        .iter()
        .flat_map(|&s| {
            angles
                .iter()
                .flat_map(move |&a| (0..config.trials).map(move |t| (s, a, t)))
        })
        .collect();
    let episodes = cells
        .par_iter()
        .map(|&(s, a, t)| {
            let r = rollout(
                setup,
                rig,
                model,
                a,
                s.uses_pipeline(),
                trial_seed(seed, t),
                &config.pipeline,
            )?;
            Ok((s, a, r))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut tables = Vec::new();
    let mut vgs = Vec::new();
    for s in Setting::ALL {
        let cell = |angle: f64| {
            let results: Vec<&EpisodeResult> = episodes
                .iter()
                .filter(|(es, ea, _)| *es == s && *ea == angle)
                .map(|(_, _, r)| r)
                .collect();
            Cell::new(results.len(), results.iter().filter(|r| r.success).count())
        };
        let table = SuccessTable {
            baseline_angle: config.baseline_angle,
            baseline: cell(config.baseline_angle)?,
            novel: config
                .angles
                .iter()
                .map(|&a| Ok((a, cell(a)?)))
                .collect::<Result<Vec<_>>>()?,
        };
        // an all-failure baseline leaves the score undefined; the table is
        // still reported
        match vgs_report(table.clone()) {
            Ok(r) => vgs.push((s, r)),
            Err(Error::UndefinedBaseline) => log::warn!("{} baseline never succeeded; no VGS", s.name()),
            Err(e) => return Err(e),
        }
        tables.push((s, table));
    }

    let nvs = config
        .angles
        .iter()
        .map(|&a| nvs_comparison(setup, rig, a, config, seed, model.config().actions_per_plan()))
        .collect::<Result<Vec<_>>>()?;
    let scatter = feature_scatter(setup, rig, config, seed)?;
    Ok(BenchReport {
        seed,
        tables,
        vgs,
        nvs,
        scatter,
        episodes,
    })
}

/// Pipeline, bare warp and raw novel view scored against the canonical
/// ground truth at `angle`, averaged over `config.nvs_scenes` scenes drawn
/// from the master `seed`.
pub fn nvs_comparison(
    setup: &TaskSetup,
    rig: &CameraRig,
    angle: f64,
    config: &BenchConfig,
    seed: u64,
    replan: usize,
) -> Result<NvsComparison> {
    if config.nvs_scenes == 0 {
        return Err(Error::invalid("nvs_scenes must be at least 1"));
    }
    let camera = rig.camera_at_angle(angle)?;
    let k = rig.intrinsics();
    let (depth_source, pose_source) = (DepthSource::GroundTruth, PoseSource::GroundTruth);
    let seed = derive_seed(seed, NVS_STREAM);
    let per_scene = (0..config.nvs_scenes)
        .into_par_iter()
        .map(|i| {
            let scene_seed = derive_seed(seed, i as u64);
            let (mut scene, mut robot, task) = setup.sample(scene_seed)?;
            let (depth_source, pose_source) = match config.pipeline.providers.kind {
                crate::synthesis::ProviderKind::GroundTruth => (depth_source.clone(), pose_source.clone()),
                _ => config.pipeline.providers.sources(scene_seed),
            };
            let mut memory = MemoryBuffer::new();
            let mut t = 0;
            loop {
                let (image, depth) = render(&scene, &robot, &camera, k, &setup.sim);
                let obs = Observation {
                    image,
                    depth,
                    camera,
                    step: t as u64,
                    gripper: Some(robot.gripper),
                };
                let out = synthesize(&obs, &depth_source, &pose_source, rig, &memory, &config.pipeline)?;
                if t >= config.nvs_steps {
                    let (gt, gt_depth) = render(&scene, &robot, rig.canonical(), k, &setup.sim);
                    let covis = co_visible(&out.warp, &gt_depth, CO_VISIBLE_TOLERANCE)?;
                    let n = covis.as_slice().iter().filter(|&&c| c).count();
                    return Ok([
                        psnr(&out.image, &gt, Some(&covis))?,
                        psnr(&out.image, &gt, None)?,
                        psnr(&out.warp.image, &gt, None)?,
                        psnr(&obs.image, &gt, None)?,
                        ssim(&out.image, &gt)?,
                        n as f64,
                    ]);
                }
                memory = out.memory;
                for _ in 0..replan.min(config.nvs_steps - t) {
                    let a = expert_action(&scene, &robot, &task, &setup.sim)?;
                    (scene, robot) = step(&scene, &robot, &a, &setup.sim);
                    t += 1;
                }
            }
        })
        .collect::<Result<Vec<[f64; 6]>>>()?;
    let n = per_scene.len() as f64;
    let mean = |j: usize| per_scene.iter().map(|r| r[j]).sum::<f64>() / n;
    Ok(NvsComparison {
        angle,
        pipeline_co_visible: mean(0),
        pipeline_full: mean(1),
        warp_full: mean(2),
        raw_full: mean(3),
        ssim: mean(4),
        co_visible_pixels: per_scene.iter().map(|r| r[5] as usize).sum(),
        total_pixels: per_scene.len() * k.width() * k.height(),
    })
}

/// Features of canonical renders (`source`), raw novel renders (`novel`)
/// and pipeline outputs (`generated`) projected onto two principal axes.
pub fn feature_scatter(setup: &TaskSetup, rig: &CameraRig, config: &BenchConfig, seed: u64) -> Result<FeatureScatter> {
    let seed = derive_seed(seed, SCATTER_STREAM);
    let k = rig.intrinsics();
    let cameras = config
        .scatter_angles
        .iter()
        .map(|&a| rig.camera_at_angle(a))
        .collect::<Result<Vec<_>>>()?;
    type Triple = (FeatureVector, Vec<FeatureVector>, Vec<FeatureVector>);
    let per_scene = (0..config.scatter_scenes)
        .into_par_iter()
        .map(|i| -> Result<Triple> {
            let scene_seed = derive_seed(seed, i as u64);
            let (scene, robot, _) = setup.sample(scene_seed)?;
            let (canon, _) = render(&scene, &robot, rig.canonical(), k, &setup.sim);
            let source = extract_features_with(&canon, &config.pipeline.features)?;
            let (depth_source, pose_source) = config.pipeline.providers.sources(scene_seed);
            let mut novel = Vec::new();
            let mut generated = Vec::new();
            for camera in &cameras {
                let (image, depth) = render(&scene, &robot, camera, k, &setup.sim);
                novel.push(extract_features_with(&image, &config.pipeline.features)?);
                let obs = Observation {
                    image,
                    depth,
                    camera: *camera,
                    step: 0,
                    gripper: Some(robot.gripper),
                };
                let out = synthesize(
                    &obs,
                    &depth_source,
                    &pose_source,
                    rig,
                    &MemoryBuffer::new(),
                    &config.pipeline,
                )?;
                generated.push(out.features);
            }
            Ok((source, novel, generated))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut groups: Vec<(String, Vec<FeatureVector>)> = ["source", "novel", "generated"]
        .iter()
        .map(|l| (l.to_string(), Vec::new()))
        .collect();
    for (s, n, g) in per_scene {
        groups[0].1.push(s);
        groups[1].1.extend(n);
        groups[2].1.extend(g);
    }
    pca_scatter(&groups)
}
