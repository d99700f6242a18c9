use std::collections::HashSet;

use canonview::geometry::{
    check_rotation, interpolate_pose, project_splat, rotation_angle, transform, unproject, CameraIntrinsics,
    InterpolationMode, Point, PointCloud, Pose,
};
use canonview::scene::{render, CameraRig, RigConfig, TaskKind, TaskSetup};
use nalgebra::Vector3;
use proptest::prelude::*;

fn rig() -> CameraRig {
    CameraRig::from_config(&RigConfig::default()).unwrap()
}

prop_compose! {
    fn pose()(ax in -1.0..1.0f64, ay in -1.0..1.0f64, az in 0.1..1.0f64, angle in -3.0..3.0f64,
              t in prop::array::uniform3(-2.0..2.0f64)) -> Pose {
        Pose::from_axis_angle(&Vector3::new(ax, ay, az), angle, Vector3::from(t))
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn identity_warp_reproduces_every_valid_pixel(seed in any::<u64>(), angle in -60.0..60.0f64) {
        let rig = rig();
        let k = rig.intrinsics();
        let setup = TaskSetup::preset(TaskKind::PickPlace);
        let (scene, robot, _) = setup.sample(seed).unwrap();
        let (image, depth) = render(&scene, &robot, &rig.camera_at_angle(angle).unwrap(), k, &setup.sim);
        let cloud = transform(&unproject(&image, &depth, k).unwrap(), &Pose::identity());
        let warp = project_splat(&cloud, k);
        for y in 0..k.height() {
            for x in 0..k.width() {
                if depth.at(x, y).is_none() {
                    continue;
                }
                prop_assert!(!*warp.mask.get(x, y));
                let (a, b) = (image.get(x, y), warp.image.get(x, y));
                for c in 0..3 {
                    prop_assert!((a[c] - b[c]).abs() <= 1.0 / 255.0);
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn nearest_point_wins_regardless_of_order(
        depths in prop::collection::vec(0.2..5.0f64, 2..8).prop_shuffle(),
        u in 2usize..30, v in 2usize..30,
    ) {
        let k = CameraIntrinsics::square(32, 30.0).unwrap();
        let points: Vec<Point> = depths
            .iter()
            .enumerate()
            .map(|(i, &d)| Point {
                position: k.backproject(u as f64, v as f64, d),
                color: [i as f32 / 10.0; 3],
                footprint: false,
            })
            .collect();
        let warp = project_splat(&PointCloud::new(points).unwrap(), &k);
        let nearest = depths.iter().cloned().fold(f64::INFINITY, f64::min);
        let got = warp.depth.at(u, v).unwrap() as f64;
        prop_assert!((got - nearest).abs() <= 1e-6 * nearest);
    }

    #[test]
    fn holes_are_exactly_the_unreached_pixels(
        pts in prop::collection::vec((0.0..16.0f64, 0.0..16.0f64, 0.3..3.0f64), 0..60),
    ) {
        let k = CameraIntrinsics::square(16, 14.0).unwrap();
        let cloud = PointCloud::new(
            pts.iter()
                .map(|&(u, v, d)| Point { position: k.backproject(u, v, d), color: [0.5; 3], footprint: false })
                .collect(),
        )
        .unwrap();
        let warp = project_splat(&cloud, &k);
        let reached: HashSet<(i64, i64)> = cloud
            .points()
            .iter()
            .map(|p| k.project(&p.position))
            .map(|uv| (uv.x.round() as i64, uv.y.round() as i64))
            .collect();
        prop_assert!(warp.is_consistent());
        for y in 0..16 {
            for x in 0..16 {
                let hole = *warp.mask.get(x, y);
                prop_assert_eq!(hole, !reached.contains(&(x as i64, y as i64)));
                prop_assert_eq!(hole, warp.depth.at(x, y).is_none());
            }
        }
    }

    #[test]
    fn poses_stay_valid_under_every_operation(a in pose(), b in pose(), t in 0.0..=1.0f64) {
        for p in [
            a.compose(&b),
            a.inverse(),
            interpolate_pose(&a, &b, t, InterpolationMode::Geodesic).unwrap(),
            interpolate_pose(&a, &b, t, InterpolationMode::Linear).unwrap(),
        ] {
            prop_assert!(check_rotation(p.rotation()).is_ok());
        }
    }

    #[test]
    fn geodesic_angle_is_linear_in_t(a in pose(), b in pose(), t in 0.0..=1.0f64) {
        let total = a.rotation_angle_to(&b);
        prop_assume!(total < 3.0);
        let p = interpolate_pose(&a, &b, t, InterpolationMode::Geodesic).unwrap();
        let travelled = rotation_angle(&(b.rotation().transpose() * p.rotation()));
        prop_assert!((travelled - t * total).abs() <= 1e-6, "{} vs {}", travelled, t * total);
    }
}

#[test]
fn warp_is_bit_identical_across_calls() {
    let rig = rig();
    let setup = TaskSetup::preset(TaskKind::Push);
    let (scene, robot, _) = setup.sample(9).unwrap();
    let camera = rig.camera_at_angle(30.0).unwrap();
    let (image, depth) = render(&scene, &robot, &camera, rig.intrinsics(), &setup.sim);
    let rel = canonview::scene::relative_pose(&camera, rig.canonical());
    let a = canonview::synthesis::warp_to_canonical(&image, &depth, &rel, rig.intrinsics()).unwrap();
    let b = canonview::synthesis::warp_to_canonical(&image, &depth, &rel, rig.intrinsics()).unwrap();
    assert_eq!(a, b);
}
