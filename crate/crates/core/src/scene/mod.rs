//! Deterministic tabletop world: analytic rendering with exact depth,
//! kinematic gripper dynamics, scripted experts and demo collection.

mod demos;
mod dynamics;
pub mod io;
mod render;
mod rig;
mod task;
mod world;

pub use demos::{collect_demos, collect_demos_with, DemoEpisode, DemoStep, DemoSummary};
pub use dynamics::step;
pub use render::render;
pub use rig::{relative_pose, CameraRig, RigConfig};
pub use task::{expert_action, is_success, GoalRegion, TaskKind, TaskSetup, TaskSpec, TARGET_ID};
pub use world::{
    Aabb, Action, ObjectId, RobotState, Scene, SceneObject, Shape, SimConfig, BACKGROUND_COLOR, TABLE_COLOR,
};
