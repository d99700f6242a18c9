use nalgebra::{Vector2, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::world::{Action, ObjectId, RobotState, Scene, SceneObject, Shape, SimConfig, BACKGROUND_COLOR, TABLE_COLOR};
use crate::error::{Error, Result};
use crate::geometry::Rgb;
use crate::rng::rng_from_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Reach,
    Push,
    PickPlace,
}

impl TaskKind {
    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::Reach => "reach",
            TaskKind::Push => "push",
            TaskKind::PickPlace => "pick-place",
        }
    }
}

impl std::str::FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reach" => Ok(TaskKind::Reach),
            "push" => Ok(TaskKind::Push),
            "pick-place" | "pick_place" => Ok(TaskKind::PickPlace),
            other => Err(Error::invalid(format!("unknown task `{other}`"))),
        }
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalRegion {
    pub center: Vector3<f64>,
    pub radius: f64,
}

impl GoalRegion {
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (p - self.center).norm() <= self.radius
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub target: ObjectId,
    pub goal: GoalRegion,
    pub step_limit: usize,
}

impl TaskSpec {
    pub fn validate(&self, sim: &SimConfig) -> Result<()> {
        if !(self.goal.radius > 0.0) {
            return Err(Error::invalid("goal radius must be positive"));
        }
        if !sim.workspace.contains(&self.goal.center) {
            return Err(Error::invalid("goal region lies outside the workspace"));
        }
        if self.step_limit == 0 {
            return Err(Error::invalid("step limit must be positive"));
        }
        Ok(())
    }
}

pub const TARGET_ID: ObjectId = 1;

/// Episode generator: task constants plus the randomization of the initial
/// target position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskSetup {
    pub kind: TaskKind,
    pub target_shape: Shape,
    pub target_color: Rgb,
    /// Initial target xy is uniform in this rectangle.
    pub spawn_min: [f64; 2],
    pub spawn_max: [f64; 2],
    /// For reach the goal follows the target; only its radius and height
    /// offset above the target center are used.
    pub goal_center: [f64; 3],
    pub goal_radius: f64,
    pub gripper_start: [f64; 3],
    pub step_limit: usize,
    pub distractors: Vec<SceneObject>,
    pub sim: SimConfig,
}

impl Default for TaskSetup {
    fn default() -> Self {
        Self::preset(TaskKind::Push)
    }
}

impl TaskSetup {
    pub fn preset(kind: TaskKind) -> Self {
        let sphere = SceneObject {
            id: 2,
            shape: Shape::Sphere { radius: 0.03 },
            center: Vector3::new(0.17, 0.10, 0.03),
            color: [0.20, 0.70, 0.30],
            pushable: false,
        };
        match kind {
            TaskKind::Push => Self {
                kind,
                target_shape: Shape::Box { half_extent: 0.025 },
                target_color: [0.15, 0.35, 0.85],
                spawn_min: [-0.10, -0.08],
                spawn_max: [0.10, 0.00],
                goal_center: [0.0, 0.12, 0.025],
                goal_radius: 0.03,
                gripper_start: [0.0, -0.20, 0.08],
                step_limit: 80,
                distractors: vec![sphere],
                sim: SimConfig::default(),
            },
            TaskKind::PickPlace => Self {
                kind,
                target_shape: Shape::Box { half_extent: 0.02 },
                target_color: [0.90, 0.70, 0.10],
                spawn_min: [-0.12, -0.10],
                spawn_max: [0.00, 0.04],
                goal_center: [0.12, 0.08, 0.02],
                goal_radius: 0.03,
                gripper_start: [0.0, -0.20, 0.10],
                step_limit: 100,
                distractors: vec![sphere],
                sim: SimConfig::default(),
            },
            TaskKind::Reach => Self {
                kind,
                target_shape: Shape::Sphere { radius: 0.02 },
                target_color: [0.90, 0.55, 0.10],
                spawn_min: [-0.15, -0.10],
                spawn_max: [0.15, 0.10],
                goal_center: [0.0, 0.0, 0.05],
                goal_radius: 0.02,
                gripper_start: [0.0, -0.20, 0.10],
                step_limit: 60,
                distractors: vec![sphere],
                sim: SimConfig::default(),
            },
        }
    }

    /// Initial world and per-episode task, a pure function of the seed.
    pub fn sample(&self, seed: u64) -> Result<(Scene, RobotState, TaskSpec)> {
        let mut rng = rng_from_seed(seed);
        let x = rng.random_range(self.spawn_min[0]..=self.spawn_max[0]);
        let y = rng.random_range(self.spawn_min[1]..=self.spawn_max[1]);
        let extent = self.target_shape.extent();
        let target = SceneObject {
            id: TARGET_ID,
            shape: self.target_shape,
            center: Vector3::new(x, y, extent),
            color: self.target_color,
            pushable: self.kind == TaskKind::Push,
        };
        let goal_center = match self.kind {
            TaskKind::Reach => target.center + Vector3::new(0.0, 0.0, self.goal_center[2]),
            _ => Vector3::from(self.goal_center),
        };
        let mut objects = vec![target];
        objects.extend(self.distractors.iter().cloned());
        let scene = Scene::new(objects, 0.0, TABLE_COLOR, BACKGROUND_COLOR)?;
        let robot = RobotState::open_at(Vector3::from(self.gripper_start));
        let task = TaskSpec {
            kind: self.kind,
            target: TARGET_ID,
            goal: GoalRegion {
                center: goal_center,
                radius: self.goal_radius,
            },
            step_limit: self.step_limit,
        };
        task.validate(&self.sim)?;
        Ok((scene, robot, task))
    }
}

/// Reach: gripper inside the goal. Otherwise: target center inside the goal.
pub fn is_success(scene: &Scene, robot: &RobotState, task: &TaskSpec) -> bool {
    match task.kind {
        TaskKind::Reach => task.goal.contains(&robot.gripper),
        _ => scene.object(task.target).is_some_and(|o| task.goal.contains(&o.center)),
    }
}

/// Scripted proportional controller toward the current subgoal.
pub fn expert_action(scene: &Scene, robot: &RobotState, task: &TaskSpec, sim: &SimConfig) -> Result<Action> {
    let target = scene
        .object(task.target)
        .ok_or_else(|| Error::Infeasible(format!("target object {} is not in the scene", task.target)))?;
    if is_success(scene, robot, task) {
        return Ok(Action::idle(robot.grip_closed && task.kind != TaskKind::PickPlace));
    }
    let action = match task.kind {
        TaskKind::Reach => Action::new(task.goal.center - robot.gripper, false),
        TaskKind::Push => push_action(target, robot, task, sim),
        TaskKind::PickPlace => pick_place_action(target, robot, task, sim),
    };
    Ok(action.clamped(sim.max_step))
}

fn push_action(obj: &SceneObject, robot: &RobotState, task: &TaskSpec, sim: &SimConfig) -> Action {
    let g = sim.gripper_half_extent;
    let contact = obj.shape.extent() + g;
    let push_z = obj.bottom() + g + 0.002;
    let safe_z = obj.top() + g + 0.03;
    let grip = robot.gripper;
    let to_goal = task.goal.center.xy() - obj.center.xy();
    let dist = to_goal.norm();
    let dir = if dist > 1e-9 { to_goal / dist } else { Vector2::y() };
    let rel = grip.xy() - obj.center.xy();
    let along = rel.dot(&dir);
    let lateral = (rel - dir * along).norm();
    let low = grip.z - g < obj.top();

    let behind = along < -0.5 * contact && lateral < 0.6 * contact;
    if behind && (grip.z - push_z).abs() < 0.01 {
        let touch = obj.center.xy() - dir * contact;
        let xy = (touch - grip.xy()) + dir * dist.min(sim.max_step);
        return Action::new(Vector3::new(xy.x, xy.y, push_z - grip.z), false);
    }
    let stage = obj.center.xy() - dir * (contact + 0.02);
    let to_stage = stage - grip.xy();
    let target = if to_stage.norm() <= 0.01 {
        Vector3::new(stage.x, stage.y, push_z)
    } else if low && rel.norm() < contact + 0.02 {
        Vector3::new(grip.x, grip.y, safe_z)
    } else {
        Vector3::new(stage.x, stage.y, safe_z)
    };
    Action::new(target - grip, false)
}

fn pick_place_action(obj: &SceneObject, robot: &RobotState, task: &TaskSpec, sim: &SimConfig) -> Action {
    let g = sim.gripper_half_extent;
    let grip = robot.gripper;
    let goal = task.goal.center;
    let carry_z = goal.z + obj.shape.extent() + g + 0.05;
    if robot.attached == Some(obj.id) {
        let c = obj.center;
        let xy_err = (goal.xy() - c.xy()).norm();
        let wanted = if xy_err > 0.005 {
            if c.z < carry_z - 0.005 {
                Vector3::new(c.x, c.y, carry_z)
            } else {
                Vector3::new(goal.x, goal.y, carry_z)
            }
        } else if (c - goal).norm() > 0.004 {
            goal
        } else {
            return Action::idle(false);
        };
        return Action::new(wanted - c, true);
    }
    if robot.grip_closed {
        return Action::idle(false);
    }
    let hover_z = obj.top() + g + 0.03;
    let xy_err = (obj.center.xy() - grip.xy()).norm();
    let target = if xy_err > 0.005 {
        Vector3::new(obj.center.x, obj.center.y, grip.z.max(hover_z))
    } else if (obj.center - grip).norm() > 0.5 * sim.grasp_radius {
        obj.center
    } else {
        return Action::idle(true);
    };
    Action::new(target - grip, false)
}
