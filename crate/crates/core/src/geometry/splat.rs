use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::camera::CameraIntrinsics;
use super::cloud::PointCloud;
use super::image::{count_set, DepthMap, Grid, ImageRGB, Mask, Rgb};
use crate::error::Result;

/// Points with camera z at or below this plane are culled.
pub const Z_NEAR: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplatOptions {
    /// Footprint half-size in pixels; radius 1 covers a 3x3 block.
    pub radius: u32,
    /// Relative depth step that marks a discontinuity. It also serves as the
    /// depth bias of footprint samples against exact-pixel samples.
    pub edge_threshold: f64,
    pub z_near: f64,
    /// Color written where nothing landed.
    pub hole_color: Rgb,
}

impl Default for SplatOptions {
    fn default() -> Self {
        Self {
            radius: 1,
            edge_threshold: 0.03,
            z_near: Z_NEAR,
            hole_color: [0.0; 3],
        }
    }
}

/// Splatted image `I_r`, hole mask `M_r` (`true` = nothing landed) and the
/// depth of the winning sample per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct WarpResult {
    pub image: ImageRGB,
    pub mask: Mask,
    pub depth: DepthMap,
}

impl WarpResult {
    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    pub fn hole_count(&self) -> usize {
        count_set(&self.mask)
    }

    pub fn hole_fraction(&self) -> f64 {
        self.hole_count() as f64 / self.mask.len().max(1) as f64
    }

    /// Holes and depth validity must be complementary.
    pub fn is_consistent(&self) -> bool {
        self.mask
            .as_slice()
            .iter()
            .zip(self.depth.validity().as_slice())
            .all(|(hole, valid)| hole != valid)
    }
}

#[derive(Clone, Copy)]
struct Sample {
    key: f64,
    footprint: bool,
    depth: f64,
    color: Rgb,
}

/// Total order on samples competing for one pixel; `Less` wins.
/// Effective depth first, exact-pixel hits before footprint hits, then true
/// depth and color so the result never depends on input order.
fn rank(a: &Sample, b: &Sample) -> Ordering {
    a.key
        .total_cmp(&b.key)
        .then(a.footprint.cmp(&b.footprint))
        .then(a.depth.total_cmp(&b.depth))
        .then_with(|| {
            a.color
                .iter()
                .zip(&b.color)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
}

pub fn project_splat(cloud: &PointCloud, k: &CameraIntrinsics) -> WarpResult {
    project_splat_with(cloud, k, &SplatOptions::default())
}

/// Forward-projects every point with `z > z_near` to
/// `(round(fx x / z + cx), round(fy y / z + cy))` and z-buffers the result.
///
/// Footprint samples compete with effective depth `z (1 + edge_threshold)`,
/// so a point's own pixel keeps it unless a neighbour is clearly nearer.
/// Points whose center pixel falls outside the image are culled.
pub fn project_splat_with(cloud: &PointCloud, k: &CameraIntrinsics, options: &SplatOptions) -> WarpResult {
    let (w, h) = (k.width(), k.height());
    let mut best: Vec<Option<Sample>> = vec![None; w * h];
    let r = options.radius as i64;
    let bias = 1.0 + options.edge_threshold.max(0.0);
    for p in cloud.points() {
        let z = p.position.z;
        if !(z > options.z_near) {
            continue;
        }
        let uv = k.project(&p.position);
        // f64::round rounds half away from zero.
        let (uf, vf) = (uv.x.round(), uv.y.round());
        if !(uf >= 0.0 && vf >= 0.0 && uf < w as f64 && vf < h as f64) {
            continue;
        }
        let (u, v) = (uf as i64, vf as i64);
        let reach = if p.footprint { r } else { 0 };
        for dy in -reach..=reach {
            let y = v + dy;
            if y < 0 || y >= h as i64 {
                continue;
            }
            for dx in -reach..=reach {
                let x = u + dx;
                if x < 0 || x >= w as i64 {
                    continue;
                }
                let exact = dx == 0 && dy == 0;
                let candidate = Sample {
                    key: if exact { z } else { z * bias },
                    footprint: !exact,
                    depth: z,
                    color: p.color,
                };
                let slot = &mut best[y as usize * w + x as usize];
                match slot {
                    Some(current) if rank(&candidate, current) != Ordering::Less => {}
                    _ => *slot = Some(candidate),
                }
            }
        }
    }

    let mut pixels = Vec::with_capacity(w * h);
    let mut mask = Vec::with_capacity(w * h);
    let mut depth = Vec::with_capacity(w * h);
    let mut valid = Vec::with_capacity(w * h);
    for s in &best {
        match s {
            Some(s) => {
                pixels.push(s.color);
                mask.push(false);
                depth.push(s.depth as f32);
                valid.push(true);
            }
            None => {
                pixels.push(options.hole_color);
                mask.push(true);
                depth.push(0.0);
                valid.push(false);
            }
        }
    }
    WarpResult {
        image: ImageRGB::from_clamped(grid(w, h, pixels)),
        mask: grid(w, h, mask),
        depth: DepthMap::from_trusted(grid(w, h, depth), grid(w, h, valid)),
    }
}

fn grid<T>(w: usize, h: usize, data: Vec<T>) -> Grid<T> {
    Grid::from_vec(w, h, data).expect("buffer sized to the image")
}

/// Empty warp: every pixel is a hole.
pub fn empty_warp(k: &CameraIntrinsics, options: &SplatOptions) -> Result<WarpResult> {
    let (w, h) = (k.width(), k.height());
    Ok(WarpResult {
        image: ImageRGB::filled(w, h, options.hole_color),
        mask: Grid::filled(w, h, true),
        depth: DepthMap::invalid(w, h),
    })
}
