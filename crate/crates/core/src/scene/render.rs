//! One-ray-per-pixel analytic renderer with exact z-depth.

use nalgebra::Vector3;

use super::world::{RobotState, Scene, Shape, SimConfig};
use crate::geometry::{CameraIntrinsics, DepthMap, Grid, ImageRGB, Pose, Rgb, Z_NEAR};

/// Direction towards the light, world frame.
const LIGHT: [f64; 3] = [-0.35, -0.55, 1.0];
const AMBIENT: f64 = 0.45;

#[derive(Clone, Copy)]
struct Hit {
    depth: f64,
    normal: Vector3<f64>,
    color: Rgb,
}

/// Renders RGB and z-depth (distance along the optical axis) from a
/// camera-to-world pose. Output colors are quantized to 8 bits so they
/// survive the on-disk image format unchanged.
pub fn render(
    scene: &Scene,
    robot: &RobotState,
    camera: &Pose,
    k: &CameraIntrinsics,
    sim: &SimConfig,
) -> (ImageRGB, DepthMap) {
    let (w, h) = (k.width(), k.height());
    let origin = *camera.translation();
    let rot = camera.rotation();
    let light = Vector3::from(LIGHT).normalize();
    let g = sim.gripper_half_extent;
    let mut robot_prims = vec![Primitive::cube(robot.gripper, g, sim.gripper_color(robot))];
    if sim.arm_half_width > 0.0 && sim.arm_top > robot.gripper.z + g {
        let a = sim.arm_half_width;
        robot_prims.push(Primitive::Slab {
            min: Vector3::new(robot.gripper.x - a, robot.gripper.y - a, robot.gripper.z + g),
            max: Vector3::new(robot.gripper.x + a, robot.gripper.y + a, sim.arm_top),
            color: sim.arm_color,
        });
    }
    let prims: Vec<Primitive> = scene
        .objects()
        .iter()
        .map(|o| match o.shape {
            Shape::Box { half_extent } => Primitive::cube(o.center, half_extent, o.color),
            Shape::Sphere { radius } => Primitive::Ball {
                center: o.center,
                radius,
                color: o.color,
            },
        })
        .chain(robot_prims)
        .collect();

    let mut pixels = Vec::with_capacity(w * h);
    let mut depth = Vec::with_capacity(w * h);
    let mut valid = Vec::with_capacity(w * h);
    for v in 0..h {
        for u in 0..w {
            let dir = rot * k.ray(u as f64, v as f64);
            let mut best: Option<Hit> = intersect_table(scene, &origin, &dir);
            for p in &prims {
                if let Some(hit) = p.intersect(&origin, &dir) {
                    if best.is_none_or(|b| hit.depth < b.depth) {
                        best = Some(hit);
                    }
                }
            }
            match best {
                Some(hit) => {
                    let shade = AMBIENT + (1.0 - AMBIENT) * hit.normal.dot(&light).max(0.0);
                    pixels.push(quantize(hit.color, shade));
                    depth.push(hit.depth as f32);
                    valid.push(true);
                }
                None => {
                    pixels.push(quantize(scene.background(), 1.0));
                    depth.push(0.0);
                    valid.push(false);
                }
            }
        }
    }
    let image = ImageRGB::from_trusted(Grid::from_vec(w, h, pixels).expect("sized buffer"));
    let depth = DepthMap::new(
        Grid::from_vec(w, h, depth).expect("sized buffer"),
        Grid::from_vec(w, h, valid).expect("sized buffer"),
    )
    .expect("renderer emits positive finite depths");
    (image, depth)
}

fn quantize(color: Rgb, shade: f64) -> Rgb {
    color.map(|c| ((c as f64 * shade).clamp(0.0, 1.0) * 255.0).round() as f32 / 255.0)
}

fn intersect_table(scene: &Scene, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<Hit> {
    if dir.z >= 0.0 {
        return None;
    }
    let s = (scene.table_height() - origin.z) / dir.z;
    (s > Z_NEAR).then(|| Hit {
        depth: s,
        normal: Vector3::z(),
        color: scene.table_color(),
    })
}

enum Primitive {
    Slab {
        min: Vector3<f64>,
        max: Vector3<f64>,
        color: Rgb,
    },
    Ball {
        center: Vector3<f64>,
        radius: f64,
        color: Rgb,
    },
}

impl Primitive {
    fn cube(center: Vector3<f64>, half: f64, color: Rgb) -> Self {
        let d = Vector3::repeat(half);
        Primitive::Slab {
            min: center - d,
            max: center + d,
            color,
        }
    }

    /// `dir` has unit camera-z, so the ray parameter is the z-depth.
    fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<Hit> {
        match *self {
            Primitive::Slab { min, max, color } => {
                let mut t0 = f64::NEG_INFINITY;
                let mut t1 = f64::INFINITY;
                let mut axis = 0;
                for i in 0..3 {
                    let (lo, hi) = (min[i], max[i]);
                    if dir[i].abs() < 1e-15 {
                        if origin[i] < lo || origin[i] > hi {
                            return None;
                        }
                        continue;
                    }
                    let (mut a, mut b) = ((lo - origin[i]) / dir[i], (hi - origin[i]) / dir[i]);
                    if a > b {
                        std::mem::swap(&mut a, &mut b);
                    }
                    if a > t0 {
                        t0 = a;
                        axis = i;
                    }
                    t1 = t1.min(b);
                }
                if t0 > t1 || t0 <= Z_NEAR {
                    return None;
                }
                let mut normal = Vector3::zeros();
                normal[axis] = -dir[axis].signum();
                Some(Hit {
                    depth: t0,
                    normal,
                    color,
                })
            }
            Primitive::Ball { center, radius, color } => {
                let oc = origin - center;
                let a = dir.dot(dir);
                let b = oc.dot(dir);
                let c = oc.dot(&oc) - radius * radius;
                let disc = b * b - a * c;
                if disc < 0.0 {
                    return None;
                }
                let s = (-b - disc.sqrt()) / a;
                if s <= Z_NEAR {
                    return None;
                }
                let normal = (origin + dir * s - center) / radius;
                Some(Hit {
                    depth: s,
                    normal,
                    color,
                })
            }
        }
    }
}
