use rayon::prelude::*;

use super::warp::warp_to_canonical_with;
use crate::error::{Error, Result};
use crate::geometry::{
    interpolate_pose, CameraIntrinsics, DepthMap, ImageRGB, InterpolationMode, Pose, SplatOptions, WarpResult,
};
use crate::scene::relative_pose;

/// Frames rendered along the camera path from the novel view to the
/// canonical view. `params[i]` is the progress toward the canonical view.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationSequence {
    pub params: Vec<f64>,
    pub frames: Vec<WarpResult>,
}

impl InterpolationSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn last(&self) -> &WarpResult {
        self.frames.last().expect("sequence has at least two frames")
    }
}

/// Uniform grid `t_i = i / (count - 1)`.
pub fn interpolation_params(count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::invalid(format!(
            "interpolation needs at least 2 frames, got {count}"
        )));
    }
    Ok((0..count).map(|i| i as f64 / (count - 1) as f64).collect())
}

/// Frame `i` is the novel observation re-rendered at
/// `interpolate_pose(t_n, t_t, 1 - t_i)`, so the first frame sits at the
/// novel camera (no relative motion) and the last at the canonical camera.
pub fn interpolation_frames(
    i_n: &ImageRGB,
    d_n: &DepthMap,
    t_n: &Pose,
    t_t: &Pose,
    k: &CameraIntrinsics,
    count: usize,
) -> Result<InterpolationSequence> {
    interpolation_frames_with(
        i_n,
        d_n,
        t_n,
        t_t,
        k,
        count,
        InterpolationMode::default(),
        &SplatOptions::default(),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn interpolation_frames_with(
    i_n: &ImageRGB,
    d_n: &DepthMap,
    t_n: &Pose,
    t_t: &Pose,
    k: &CameraIntrinsics,
    count: usize,
    mode: InterpolationMode,
    options: &SplatOptions,
) -> Result<InterpolationSequence> {
    let params = interpolation_params(count)?;
    let frames = params
        .par_iter()
        .map(|&t| {
            let camera = interpolate_pose(t_n, t_t, 1.0 - t, mode)?;
            warp_to_canonical_with(i_n, d_n, &relative_pose(t_n, &camera), k, options)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InterpolationSequence { params, frames })
}
