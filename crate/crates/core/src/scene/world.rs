use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Rgb;

pub type ObjectId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    /// Axis-aligned cube.
    Box {
        half_extent: f64,
    },
    Sphere {
        radius: f64,
    },
}

impl Shape {
    /// Vertical half-size; also the radius of the disc used for contact.
    pub fn extent(&self) -> f64 {
        match *self {
            Shape::Box { half_extent } => half_extent,
            Shape::Sphere { radius } => radius,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: ObjectId,
    pub shape: Shape,
    pub center: Vector3<f64>,
    pub color: Rgb,
    /// Gripper contact displaces pushable objects.
    #[serde(default)]
    pub pushable: bool,
}

impl SceneObject {
    pub fn bottom(&self) -> f64 {
        self.center.z - self.shape.extent()
    }

    pub fn top(&self) -> f64 {
        self.center.z + self.shape.extent()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    objects: Vec<SceneObject>,
    table_height: f64,
    table_color: Rgb,
    background: Rgb,
}

impl Scene {
    pub fn new(objects: Vec<SceneObject>, table_height: f64, table_color: Rgb, background: Rgb) -> Result<Self> {
        let scene = Self {
            objects,
            table_height,
            table_color,
            background,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn empty() -> Self {
        Self {
            objects: Vec::new(),
            table_height: 0.0,
            table_color: TABLE_COLOR,
            background: BACKGROUND_COLOR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, o) in self.objects.iter().enumerate() {
            if self.objects[..i].iter().any(|p| p.id == o.id) {
                return Err(Error::invalid(format!("duplicate object id {}", o.id)));
            }
            if !(o.shape.extent() > 0.0) || !o.center.iter().all(|v| v.is_finite()) {
                return Err(Error::invalid(format!("object {} has invalid geometry", o.id)));
            }
            if o.bottom() < self.table_height - 1e-9 {
                return Err(Error::invalid(format!("object {} penetrates the table", o.id)));
            }
        }
        Ok(())
    }

    pub fn objects(&self) -> &[SceneObject] {
        &self.objects
    }

    pub fn object(&self, id: ObjectId) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub(crate) fn object_mut(&mut self, id: ObjectId) -> Option<&mut SceneObject> {
        self.objects.iter_mut().find(|o| o.id == id)
    }

    pub(crate) fn objects_mut(&mut self) -> &mut [SceneObject] {
        &mut self.objects
    }

    pub fn table_height(&self) -> f64 {
        self.table_height
    }

    pub fn table_color(&self) -> Rgb {
        self.table_color
    }

    pub fn background(&self) -> Rgb {
        self.background
    }
}

pub const TABLE_COLOR: Rgb = [0.62, 0.55, 0.45];
pub const BACKGROUND_COLOR: Rgb = [0.80, 0.85, 0.92];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub gripper: Vector3<f64>,
    pub grip_closed: bool,
    pub attached: Option<ObjectId>,
}

impl RobotState {
    pub fn open_at(gripper: Vector3<f64>) -> Self {
        Self {
            gripper,
            grip_closed: false,
            attached: None,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.attached.is_none() || self.grip_closed
    }

    /// Proprioceptive vector fed to the policy: gripper position and grip.
    pub fn to_vector(&self) -> [f64; 4] {
        [
            self.gripper.x,
            self.gripper.y,
            self.gripper.z,
            if self.grip_closed { 1.0 } else { 0.0 },
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub delta: Vector3<f64>,
    /// Desired grip state, `true` = closed.
    pub grip: bool,
}

impl Action {
    pub fn new(delta: Vector3<f64>, grip: bool) -> Self {
        Self { delta, grip }
    }

    pub fn idle(grip: bool) -> Self {
        Self {
            delta: Vector3::zeros(),
            grip,
        }
    }

    /// Scales the delta down to at most `max_step`; non-finite deltas become zero.
    pub fn clamped(self, max_step: f64) -> Self {
        if !self.delta.iter().all(|v| v.is_finite()) {
            return Self::idle(self.grip);
        }
        let n = self.delta.norm();
        let delta = if n > max_step {
            self.delta * (max_step / n)
        } else {
            self.delta
        };
        Self { delta, ..self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] - 1e-12 && p[i] <= self.max[i] + 1e-12)
    }

    pub fn clamp(&self, p: &Vector3<f64>) -> Vector3<f64> {
        Vector3::from_fn(|i, _| p[i].clamp(self.min[i], self.max[i]))
    }
}

/// Simulation constants shared by the dynamics, the renderer and the expert.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub max_step: f64,
    pub grasp_radius: f64,
    pub workspace: Aabb,
    pub gripper_half_extent: f64,
    pub gripper_open_color: Rgb,
    pub gripper_closed_color: Rgb,
    /// Half-width of the vertical arm link drawn above the gripper; 0 hides it.
    /// The link is visual only and takes no part in contacts.
    pub arm_half_width: f64,
    /// Height the arm link extends to.
    pub arm_top: f64,
    pub arm_color: Rgb,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            max_step: 0.02,
            grasp_radius: 0.03,
            workspace: Aabb {
                min: Vector3::new(-0.3, -0.3, 0.0),
                max: Vector3::new(0.3, 0.3, 0.3),
            },
            gripper_half_extent: 0.015,
            gripper_open_color: [0.85, 0.15, 0.15],
            gripper_closed_color: [0.55, 0.08, 0.30],
            arm_half_width: 0.01,
            arm_top: 0.6,
            arm_color: [0.40, 0.40, 0.44],
        }
    }
}

impl SimConfig {
    pub fn gripper_color(&self, robot: &RobotState) -> Rgb {
        if robot.grip_closed {
            self.gripper_closed_color
        } else {
            self.gripper_open_color
        }
    }
}
