//! Pinhole camera math: lifting pixels with depth, rigid transforms,
//! z-buffered forward splatting and pose interpolation.

mod camera;
mod cloud;
mod image;
mod interp;
mod pose;
mod splat;

pub use camera::CameraIntrinsics;
pub use cloud::{transform, unproject, unproject_with, Point, PointCloud};
pub use image::{count_set, quantize_channel, DepthMap, Grid, ImageRGB, Mask, Rgb};
pub use interp::{interpolate_pose, nearest_rotation, InterpolationMode};
pub use pose::{check_rotation, rotation_angle, Pose, ROTATION_TOLERANCE};
pub use splat::{empty_warp, project_splat, project_splat_with, SplatOptions, WarpResult, Z_NEAR};
