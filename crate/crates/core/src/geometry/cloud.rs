use nalgebra::Vector3;

use super::camera::CameraIntrinsics;
use super::image::{DepthMap, ImageRGB, Rgb};
use super::pose::Pose;
use super::splat::SplatOptions;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub position: Vector3<f64>,
    pub color: Rgb,
    /// Whether the point may spread beyond its own pixel when splatted.
    /// Cleared for points lifted from a depth discontinuity.
    pub footprint: bool,
}

impl Point {
    pub fn new(position: Vector3<f64>, color: Rgb) -> Self {
        Self {
            position,
            color,
            footprint: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    points: Vec<Point>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.iter().any(|p| !p.position.iter().all(|v| v.is_finite())) {
            return Err(Error::invalid("point positions must be finite"));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }
}

/// Lifts every valid-depth pixel into the camera frame with default options.
pub fn unproject(image: &ImageRGB, depth: &DepthMap, k: &CameraIntrinsics) -> Result<PointCloud> {
    unproject_with(image, depth, k, &SplatOptions::default())
}

/// Lifts every valid-depth pixel `(u, v)` with depth `d` to
/// `((u - cx) d / fx, (v - cy) d / fy, d)`, carrying the pixel color.
///
/// A point loses its splat footprint when some valid pixel inside the
/// footprint neighbourhood differs in depth by more than
/// `options.edge_threshold` relative to the point's own depth.
pub fn unproject_with(
    image: &ImageRGB,
    depth: &DepthMap,
    k: &CameraIntrinsics,
    options: &SplatOptions,
) -> Result<PointCloud> {
    for (w, h) in [(image.width(), image.height()), (depth.width(), depth.height())] {
        if w != k.width() || h != k.height() {
            return Err(Error::DimensionMismatch {
                expected_width: k.width(),
                expected_height: k.height(),
                width: w,
                height: h,
            });
        }
    }
    let (w, h) = (k.width(), k.height());
    let r = options.radius as isize;
    let mut points = Vec::with_capacity(depth.valid_count());
    for v in 0..h {
        for u in 0..w {
            let Some(d) = depth.at(u, v) else { continue };
            let d = d as f64;
            let limit = options.edge_threshold * d;
            let mut smooth = true;
            'scan: for dy in -r..=r {
                for dx in -r..=r {
                    let (x, y) = (u as isize + dx, v as isize + dy);
                    if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
                        continue;
                    }
                    if let Some(n) = depth.at(x as usize, y as usize) {
                        if (n as f64 - d).abs() > limit {
                            smooth = false;
                            break 'scan;
                        }
                    }
                }
            }
            points.push(Point {
                position: k.backproject(u as f64, v as f64, d),
                color: image.get(u, v),
                footprint: smooth,
            });
        }
    }
    Ok(PointCloud { points })
}

/// Maps every position through `pose`; colors and order are kept.
pub fn transform(cloud: &PointCloud, pose: &Pose) -> PointCloud {
    PointCloud {
        points: cloud
            .points
            .iter()
            .map(|p| Point {
                position: pose.apply(&p.position),
                ..*p
            })
            .collect(),
    }
}
