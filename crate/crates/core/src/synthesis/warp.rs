use crate::error::Result;
use crate::geometry::{
    project_splat_with, transform, unproject_with, CameraIntrinsics, DepthMap, ImageRGB, Pose, SplatOptions, WarpResult,
};

/// Re-renders a novel-view frame from the camera `t_rel` maps it into.
pub fn warp_to_canonical(i_n: &ImageRGB, d_n: &DepthMap, t_rel: &Pose, k: &CameraIntrinsics) -> Result<WarpResult> {
    warp_to_canonical_with(i_n, d_n, t_rel, k, &SplatOptions::default())
}

pub fn warp_to_canonical_with(
    i_n: &ImageRGB,
    d_n: &DepthMap,
    t_rel: &Pose,
    k: &CameraIntrinsics,
    options: &SplatOptions,
) -> Result<WarpResult> {
    let cloud = unproject_with(i_n, d_n, k, options)?;
    Ok(project_splat_with(&transform(&cloud, t_rel), k, options))
}
