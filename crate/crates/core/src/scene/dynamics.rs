//! Kinematic tabletop dynamics with rule-based grasping and disc pushing.

use nalgebra::{Vector2, Vector3};

use super::world::{Action, RobotState, Scene, SimConfig};

/// Advances the world by one action. Deltas beyond the step bound or
/// leaving the workspace are clamped, never rejected.
pub fn step(scene: &Scene, robot: &RobotState, action: &Action, sim: &SimConfig) -> (Scene, RobotState) {
    let mut scene = scene.clone();
    let mut robot = robot.clone();
    let action = action.clamped(sim.max_step);
    let table = scene.table_height();

    // grip transitions act on the pre-motion configuration
    if action.grip && !robot.grip_closed {
        robot.grip_closed = true;
        let grasp = scene
            .objects()
            .iter()
            .map(|o| (o.id, (o.center - robot.gripper).norm()))
            .filter(|&(_, d)| d <= sim.grasp_radius)
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        robot.attached = grasp.map(|(id, _)| id);
    } else if !action.grip && robot.grip_closed {
        robot.grip_closed = false;
        if let Some(id) = robot.attached.take() {
            if let Some(o) = scene.object_mut(id) {
                // released objects settle on the table
                o.center.z = table + o.shape.extent();
            }
        }
    }

    let mut floor = table + sim.gripper_half_extent;
    if let Some(o) = robot.attached.and_then(|id| scene.object(id)) {
        // keep the carried object above the table
        floor = floor.max(robot.gripper.z - (o.bottom() - table));
    }
    let mut target = sim.workspace.clamp(&(robot.gripper + action.delta));
    target.z = target.z.max(floor);
    let moved = target - robot.gripper;
    robot.gripper = target;

    if let Some(o) = robot.attached.and_then(|id| scene.object_mut(id)) {
        o.center += moved;
    }

    resolve_contacts(&mut scene, &robot, &moved, sim);
    (scene, robot)
}

/// Pushes every free pushable object out of the gripper disc (xy plane).
fn resolve_contacts(scene: &mut Scene, robot: &RobotState, moved: &Vector3<f64>, sim: &SimConfig) {
    let g = sim.gripper_half_extent;
    let ws = sim.workspace;
    for o in scene.objects_mut() {
        if !o.pushable || robot.attached == Some(o.id) {
            continue;
        }
        if robot.gripper.z - g >= o.top() || robot.gripper.z + g <= o.bottom() {
            continue;
        }
        let reach = g + o.shape.extent();
        let offset = Vector2::new(o.center.x - robot.gripper.x, o.center.y - robot.gripper.y);
        let dist = offset.norm();
        if dist >= reach {
            continue;
        }
        // A flat, high-friction gripper face carries an object lying ahead
        // of it along the motion; anything else is pushed out radially.
        let motion = moved.xy();
        let shift = if motion.norm() > 1e-12 && offset.dot(&motion) > 0.0 {
            let u = motion.normalize();
            let b = offset.dot(&u);
            u * (-b + (b * b - dist * dist + reach * reach).sqrt())
        } else if dist > 1e-12 {
            offset / dist * (reach - dist)
        } else {
            Vector2::y() * reach
        };
        o.center.x = (o.center.x + shift.x).clamp(ws.min.x, ws.max.x);
        o.center.y = (o.center.y + shift.y).clamp(ws.min.y, ws.max.y);
    }
}
