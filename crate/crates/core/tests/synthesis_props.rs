use canonview::eval::psnr;
use canonview::geometry::{DepthMap, Grid, ImageRGB, WarpResult};
use canonview::scene::{relative_pose, render, CameraRig, RigConfig, TaskKind, TaskSetup};
use canonview::synthesis::{
    extract_features, inpaint, memory_fill, synthesize, DepthSource, InpaintMethod, MemoryBuffer, Observation,
    PipelineConfig, PoseSource, ProviderConfig, ProviderKind,
};
use proptest::prelude::*;

fn rig() -> CameraRig {
    CameraRig::from_config(&RigConfig::default()).unwrap()
}

fn observe(seed: u64, angle: f64, step: u64) -> Observation {
    let rig = rig();
    let setup = TaskSetup::preset(TaskKind::Push);
    let (scene, robot, _) = setup.sample(seed).unwrap();
    let camera = rig.camera_at_angle(angle).unwrap();
    let (image, depth) = render(&scene, &robot, &camera, rig.intrinsics(), &setup.sim);
    Observation {
        image,
        depth,
        camera,
        step,
        gripper: Some(robot.gripper),
    }
}

prop_compose! {
    fn warp(w: usize, h: usize)(
        colors in prop::collection::vec(prop::array::uniform3(0.0..=1.0f32), w * h),
        holes in prop::collection::vec(prop::bool::weighted(0.4), w * h),
    ) -> WarpResult {
        let image = ImageRGB::new(Grid::from_vec(w, h, colors).unwrap()).unwrap();
        let mask = Grid::from_vec(w, h, holes).unwrap();
        let valid = mask.map(|m| !m);
        let depth = DepthMap::new(mask.map(|&m| if m { 0.0 } else { 1.0 }), valid).unwrap();
        WarpResult { image, mask, depth }
    }
}

proptest! {
    #[test]
    fn hole_filling_never_touches_covered_pixels(a in warp(12, 9), b in warp(12, 9)) {
        let memory = MemoryBuffer::new().updated(&b, 0).unwrap();
        let filled = memory_fill(&a, &memory).unwrap();
        let outs = [
            inpaint(&a, InpaintMethod::PullPush),
            inpaint(&a, InpaintMethod::NearestValid),
            filled.image.clone(),
        ];
        for y in 0..9 {
            for x in 0..12 {
                if *a.mask.get(x, y) {
                    continue;
                }
                for out in &outs {
                    prop_assert_eq!(out.get(x, y), a.image.get(x, y));
                }
                prop_assert!(!*filled.mask.get(x, y));
            }
        }
    }

    #[test]
    fn features_are_pure_and_self_similar(img in warp(32, 32)) {
        let f = extract_features(&img.image).unwrap();
        prop_assert_eq!(&f, &extract_features(&img.image).unwrap());
        prop_assert!((f.cosine(&f) - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn canonical_observation_passes_through_on_valid_pixels() {
    let rig = rig();
    let mut obs = observe(4, 0.0, 0);
    obs.camera = *rig.canonical();
    let out = synthesize(
        &obs,
        &DepthSource::GroundTruth,
        &PoseSource::GroundTruth,
        &rig,
        &MemoryBuffer::new(),
        &PipelineConfig::default(),
    )
    .unwrap();
    let k = rig.intrinsics();
    for y in 0..k.height() {
        for x in 0..k.width() {
            if obs.depth.at(x, y).is_some() {
                assert_eq!(out.image.get(x, y), obs.image.get(x, y), "({x}, {y})");
            }
        }
    }
}

#[test]
fn memory_never_adds_holes_on_a_static_scene() {
    let rig = rig();
    let cfg = PipelineConfig::default();
    let mut memory = MemoryBuffer::new();
    let mut last = usize::MAX;
    for step in 0..8 {
        let obs = observe(11, 45.0, step);
        let out = synthesize(
            &obs,
            &DepthSource::GroundTruth,
            &PoseSource::GroundTruth,
            &rig,
            &memory,
            &cfg,
        )
        .unwrap();
        assert!(out.holes <= last, "step {step}: {} holes after {last}", out.holes);
        last = out.holes;
        memory = out.memory;
    }
}

/// Mean masked PSNR of the bare warp against the canonical ground truth.
fn warp_psnr(providers: ProviderConfig) -> f64 {
    let rig = rig();
    let setup = TaskSetup::preset(TaskKind::Push);
    let cfg = PipelineConfig {
        providers,
        memory: false,
        ..Default::default()
    };
    let seeds = 20;
    (0..seeds)
        .map(|s| {
            let obs = observe(100 + s, 30.0, 0);
            let (scene, robot, _) = setup.sample(100 + s).unwrap();
            let (gt, _) = render(&scene, &robot, rig.canonical(), rig.intrinsics(), &setup.sim);
            let (d, p) = cfg.providers.sources(s);
            let out = synthesize(&obs, &d, &p, &rig, &MemoryBuffer::new(), &cfg).unwrap();
            let covered = out.warp.mask.map(|h| !h);
            psnr(&out.warp.image, &gt, Some(&covered)).unwrap()
        })
        .sum::<f64>()
        / seeds as f64
}

#[test]
fn warp_quality_degrades_with_provider_noise() {
    let noisy = |sigma_depth, sigma_rot| ProviderConfig {
        kind: ProviderKind::Noisy,
        sigma_depth,
        sigma_rot,
        sigma_trans: 0.0,
    };
    for levels in [
        [(0.0, 0.0), (0.0, 0.005), (0.0, 0.01), (0.0, 0.02)],
        [(0.0, 0.0), (0.002, 0.0), (0.005, 0.0), (0.01, 0.0)],
    ] {
        let scores: Vec<f64> = levels.iter().map(|&(d, r)| warp_psnr(noisy(d, r))).collect();
        for w in scores.windows(2) {
            assert!(w[1] <= w[0] * 1.05, "{scores:?}");
        }
        assert!(scores[3] < scores[0], "{scores:?}");
    }
}

#[test]
fn zero_noise_matches_ground_truth_warp() {
    let rig = rig();
    let obs = observe(2, -30.0, 0);
    let rel = relative_pose(&obs.camera, rig.canonical());
    let expected = canonview::synthesis::warp_to_canonical(&obs.image, &obs.depth, &rel, rig.intrinsics()).unwrap();
    let cfg = ProviderConfig {
        kind: ProviderKind::Noisy,
        ..Default::default()
    };
    let (d, p) = cfg.sources(5);
    let pipe = PipelineConfig {
        memory: false,
        ..Default::default()
    };
    let out = synthesize(&obs, &d, &p, &rig, &MemoryBuffer::new(), &pipe).unwrap();
    assert_eq!(out.warp, expected);
}
