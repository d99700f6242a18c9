use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::features::{extract_features_with, FeatureConfig, FeatureVector};
use super::inpaint::{inpaint_with, InpaintMethod, NEUTRAL_COLOR};
use super::memory::{memory_fill_with, projected_box, MemoryBuffer, RecencyVeto};
use super::providers::{DepthSource, Observation, PoseSource, ProviderConfig};
use super::warp::warp_to_canonical_with;
use crate::error::{Error, Result};
use crate::geometry::{ImageRGB, InterpolationMode, Pose, Rgb, SplatOptions, WarpResult};
use crate::scene::{relative_pose, CameraRig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub providers: ProviderConfig,
    pub inpaint: InpaintMethod,
    /// Frames in the exported novel-to-canonical sequence.
    pub interpolation_count: usize,
    pub interpolation_mode: InterpolationMode,
    pub splat: SplatOptions,
    pub features: FeatureConfig,
    /// Use remembered pixels from earlier inference steps.
    pub memory: bool,
    pub recency_veto: bool,
    /// Horizontal half-size of the world-space box around the gripper whose
    /// canonical projection is protected by the recency veto.
    pub veto_half_extent: f64,
    /// How far the protected box reaches above the gripper, covering the
    /// arm that carries it.
    pub veto_height: f64,
    /// Oldest memory, in episode steps, still used inside the protected box.
    pub veto_max_age: u64,
    pub neutral_color: Rgb,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            providers: ProviderConfig::default(),
            inpaint: InpaintMethod::default(),
            interpolation_count: 5,
            interpolation_mode: InterpolationMode::default(),
            splat: SplatOptions::default(),
            features: FeatureConfig::default(),
            memory: true,
            recency_veto: true,
            veto_half_extent: 0.04,
            veto_height: 0.6,
            veto_max_age: 1,
            neutral_color: NEUTRAL_COLOR,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.providers.validate()?;
        if self.interpolation_count < 2 {
            return Err(Error::invalid("interpolation_count must be at least 2"));
        }
        for (name, v) in [
            ("veto_half_extent", self.veto_half_extent),
            ("veto_height", self.veto_height),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and non-negative")));
            }
        }
        if !(self.splat.edge_threshold.is_finite() && self.splat.edge_threshold >= 0.0) {
            return Err(Error::invalid("splat.edge_threshold must be finite and non-negative"));
        }
        if self.neutral_color.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::invalid("neutral_color channels must lie in [0, 1]"));
        }
        if self.features.is_empty() {
            return Err(Error::invalid("feature grids must be non-empty"));
        }
        Ok(())
    }
}

/// Output of one pipeline call.
#[derive(Clone, Debug, PartialEq)]
pub struct Synthesis {
    /// Generated canonical-view image.
    pub image: ImageRGB,
    pub features: FeatureVector,
    pub memory: MemoryBuffer,
    /// Canonical view straight out of the warp.
    pub warp: WarpResult,
    /// Canonical view after warping and memory filling, before inpainting.
    pub filled: WarpResult,
    /// Holes left by the warp alone.
    pub warp_holes: usize,
    /// Holes remaining after memory filling.
    pub holes: usize,
    pub estimated_pose: Pose,
}

impl Synthesis {
    pub fn hole_fraction(&self) -> f64 {
        self.holes as f64 / self.filled.mask.len().max(1) as f64
    }
}

/// Depth and pose, warp into the canonical view, fill from memory, inpaint,
/// describe.
pub fn synthesize(
    obs: &Observation,
    depth_source: &DepthSource,
    pose_source: &PoseSource,
    rig: &CameraRig,
    memory: &MemoryBuffer,
    config: &PipelineConfig,
) -> Result<Synthesis> {
    let depth = depth_source.depth(obs)?;
    let pose = pose_source.pose(obs)?;
    let k = rig.intrinsics();
    let t_rel = relative_pose(&pose, rig.canonical());
    let warp = warp_to_canonical_with(&obs.image, &depth, &t_rel, k, &config.splat)?;
    let warp_holes = warp.hole_count();
    let (filled, memory) = if config.memory {
        let veto = match (config.recency_veto, obs.gripper) {
            (true, Some(g)) => {
                let e = config.veto_half_extent;
                let lo = g - Vector3::repeat(e);
                let hi = g + Vector3::new(e, e, e.max(config.veto_height));
                projected_box(&lo, &hi, rig.canonical(), k).map(|region| RecencyVeto {
                    region,
                    now: obs.step,
                    max_age: config.veto_max_age,
                })
            }
            _ => None,
        };
        (
            memory_fill_with(&warp, memory, veto.as_ref())?,
            memory.updated(&warp, obs.step)?,
        )
    } else {
        (warp.clone(), memory.clone())
    };
    let image = inpaint_with(&filled, config.inpaint, config.neutral_color);
    let features = extract_features_with(&image, &config.features)?;
    Ok(Synthesis {
        image,
        features,
        memory,
        warp,
        holes: filled.hole_count(),
        filled,
        warp_holes,
        estimated_pose: pose,
    })
}
