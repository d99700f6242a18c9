use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use canonview::eval::{self, reports, BenchConfig, Setting};
use canonview::geometry::Pose;
use canonview::policy::{fit as fit_policy, Dataset, DatasetMeta, PolicyModel};
use canonview::scene::io::{self, DatasetManifest};
use canonview::scene::{collect_demos_with, CameraRig, TaskSetup};
use canonview::synthesis::{interpolation_frames_with, synthesize, DepthSource, MemoryBuffer, Observation, PoseSource};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::lock::DirLock;
use crate::{AnalyzeArgs, BenchArgs, CollectArgs, FitArgs, WarpArgs};

fn summary(pairs: &[(&str, String)]) {
    let line: Vec<String> = pairs.iter().map(|(k, v)| format!("{k}={v}")).collect();
    println!("{}", line.join(" "));
}

fn rig(cfg: &RunConfig) -> Result<CameraRig> {
    Ok(CameraRig::from_config(&cfg.rig)?)
}

pub fn collect(mut cfg: RunConfig, args: CollectArgs) -> Result<()> {
    if let Some(t) = args.task {
        cfg.task = t;
    }
    if let Some(n) = args.count {
        cfg.demos = n as usize;
    }
    if let Some(d) = args.dataset {
        cfg.dataset = d;
    }
    cfg.validate()?;
    let rig = rig(&cfg)?;
    let setup = TaskSetup::preset(cfg.task);
    let root = cfg.dataset.clone();
    let _lock = DirLock::acquire(&root)?;
    let dir = io::task_dir(&root, cfg.task);
    if dir.exists() {
        if !args.force {
            bail!("{} already exists; pass --force to replace it", dir.display());
        }
        fs::remove_dir_all(&dir).with_context(|| format!("removing {}", dir.display()))?;
    }
    let seed = eval::demo_seed(cfg.seed);
    let k = *rig.intrinsics();
    let camera = *rig.canonical();
    let summary_ = collect_demos_with(&setup, &rig, cfg.demos, seed, |ep| {
        io::write_episode(&root, &ep, &camera, &k).map(|_| ())
    })?;
    io::write_manifest(&root, &DatasetManifest::new(cfg.task, seed, &summary_))?;
    summary(&[
        ("command", "collect".into()),
        ("task", cfg.task.name().into()),
        ("seed", cfg.seed.to_string()),
        ("episodes", summary_.episodes.to_string()),
        ("steps", summary_.steps.to_string()),
        ("discarded", summary_.discarded.to_string()),
        ("dataset", dir.display().to_string()),
    ]);
    Ok(())
}

pub fn fit(mut cfg: RunConfig, args: FitArgs) -> Result<()> {
    if let Some(t) = args.task {
        cfg.task = t;
    }
    if let Some(d) = args.dataset {
        cfg.dataset = d;
    }
    if args.model.is_some() {
        cfg.model = args.model;
    }
    cfg.validate()?;
    let root = cfg.dataset.clone();
    if !root.is_dir() {
        bail!("dataset root {} does not exist", root.display());
    }
    let _lock = DirLock::acquire(&root)?;
    let manifest = io::read_manifest(&root, cfg.task)?;
    let dirs = io::list_episodes(&root, cfg.task)?;
    if dirs.len() != manifest.episodes {
        bail!(
            "{} lists {} episodes but {} were found",
            io::task_dir(&root, cfg.task).display(),
            manifest.episodes,
            dirs.len()
        );
    }
    let demos = dirs
        .par_iter()
        .map(|d| io::read_episode(d))
        .collect::<canonview::Result<Vec<_>>>()?;
    let meta = DatasetMeta {
        task: cfg.task,
        seed: manifest.seed,
        count: demos.len(),
    };
    let dataset = Dataset::from_demos(&demos, &cfg.pipeline.features, meta)?;
    let model = fit_policy(&dataset, &cfg.policy)?;
    let path = cfg.model_path();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    model.save(&path)?;
    summary(&[
        ("command", "fit".into()),
        ("task", cfg.task.name().into()),
        ("episodes", demos.len().to_string()),
        ("keys", model.len().to_string()),
        ("feature_len", model.feature_len().to_string()),
        ("model", path.display().to_string()),
    ]);
    Ok(())
}

pub fn warp(cfg: RunConfig, args: WarpArgs) -> Result<()> {
    cfg.pipeline.validate()?;
    let rig = rig(&cfg)?;
    let k = *rig.intrinsics();
    let image = io::read_ppm(&args.image)?;
    let depth = io::read_pfm(&args.depth)?;
    let camera = match (&args.pose, args.angle) {
        (Some(p), _) => read_pose(p)?,
        (None, Some(a)) => rig.camera_at_angle(a)?,
        (None, None) => bail!("either --pose or --angle is required"),
    };
    let obs = Observation {
        image,
        depth,
        camera,
        step: 0,
        gripper: None,
    };
    let out = synthesize(
        &obs,
        &DepthSource::GroundTruth,
        &PoseSource::GroundTruth,
        &rig,
        &MemoryBuffer::new(),
        &cfg.pipeline,
    )?;
    let seq = interpolation_frames_with(
        &obs.image,
        &obs.depth,
        &camera,
        rig.canonical(),
        &k,
        cfg.pipeline.interpolation_count,
        cfg.pipeline.interpolation_mode,
        &cfg.pipeline.splat,
    )?;
    let dir = &cfg.out;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    io::write_ppm(&dir.join("warped.ppm"), &out.warp.image)?;
    io::write_pgm(&dir.join("holes.pgm"), &out.warp.mask)?;
    for (i, f) in seq.frames.iter().enumerate() {
        io::write_ppm(&dir.join(format!("interp_{i:02}.ppm")), &f.image)?;
    }
    io::write_ppm(&dir.join("inpainted.ppm"), &out.image)?;

    let mut pairs = vec![
        ("command", "warp".to_string()),
        ("holes", out.warp_holes.to_string()),
        (
            "hole_fraction",
            format!("{:.6}", out.warp_holes as f64 / out.warp.mask.len() as f64),
        ),
        ("frames", seq.len().to_string()),
    ];
    if let Some(gt_path) = &args.gt {
        let gt = io::read_ppm(gt_path)?;
        let (mask, policy) = match &args.gt_depth {
            Some(p) => {
                let gt_depth = io::read_pfm(p)?;
                (
                    Some(eval::co_visible(&out.warp, &gt_depth, eval::CO_VISIBLE_TOLERANCE)?),
                    "co-visible",
                )
            }
            None => (None, "full"),
        };
        pairs.push(("psnr", format!("{:.6}", eval::psnr(&out.image, &gt, mask.as_ref())?)));
        pairs.push(("mask", policy.into()));
    }
    pairs.push(("out", dir.display().to_string()));
    summary(&pairs);
    Ok(())
}

fn read_pose(path: &Path) -> Result<Pose> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing pose {}", path.display()))
}

fn bench_config(cfg: &RunConfig) -> Result<BenchConfig> {
    cfg.validate()?;
    Ok(cfg.to_bench())
}

pub fn bench(mut cfg: RunConfig, args: BenchArgs) -> Result<()> {
    if let Some(t) = args.task {
        cfg.task = t;
    }
    if args.model.is_some() {
        cfg.model = args.model;
    }
    if let Some(n) = args.trials {
        cfg.trials = n as usize;
    }
    if let Some(a) = args.angles {
        cfg.angles = a;
    }
    let bench = bench_config(&cfg)?;
    let rig = rig(&cfg)?;
    let model = PolicyModel::load(&cfg.model_path())?;
    let setup = TaskSetup::preset(cfg.task);
    let _lock = DirLock::acquire(&cfg.out)?;
    let report = eval::run_benchmark(&setup, &rig, &model, &bench, cfg.seed)?;
    eval::write_reports(&cfg.out, &report)?;

    // the written table must reproduce the scores it was written with
    let (seed, tables) = eval::read_success_csv(&cfg.out.join(reports::SUCCESS_CSV))?;
    if seed != cfg.seed || tables != report.tables {
        bail!("success.csv does not round-trip");
    }
    for (s, t) in &tables {
        let again = eval::vgs(t).ok();
        if again != report.vgs_of(*s) {
            bail!("VGS of {} does not match its success table", s.name());
        }
    }

    let fmt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_else(|| "nan".into());
    summary(&[
        ("command", "bench".into()),
        ("task", cfg.task.name().into()),
        ("seed", cfg.seed.to_string()),
        ("trials", cfg.trials.to_string()),
        ("vgs_raw", fmt(report.vgs_of(Setting::Raw))),
        ("vgs_pipeline", fmt(report.vgs_of(Setting::Pipeline))),
        ("hole_fraction", fmt(report.mean_hole_fraction(bench.baseline_angle))),
        ("out", cfg.out.display().to_string()),
    ]);
    Ok(())
}

pub fn analyze(mut cfg: RunConfig, args: AnalyzeArgs) -> Result<()> {
    if let Some(t) = args.task {
        cfg.task = t;
    }
    if let Some(n) = args.scenes {
        cfg.scatter_scenes = n as usize;
    }
    let bench = bench_config(&cfg)?;
    let rig = rig(&cfg)?;
    let setup = TaskSetup::preset(cfg.task);
    let scatter = eval::feature_scatter(&setup, &rig, &bench, cfg.seed)?;
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let path = cfg.out.join(reports::SCATTER_CSV);
    fs::write(&path, reports::scatter_csv(cfg.seed, &scatter))
        .with_context(|| format!("writing {}", path.display()))?;
    let dist = |l: &str| {
        scatter
            .centroid_distance(l, "source")
            .map(|d| format!("{d:.6}"))
            .unwrap_or_default()
    };
    summary(&[
        ("command", "analyze".into()),
        ("seed", cfg.seed.to_string()),
        ("points", scatter.points.len().to_string()),
        (
            "explained",
            format!("{:.6},{:.6}", scatter.explained[0], scatter.explained[1]),
        ),
        ("dist_generated", dist("generated")),
        ("dist_novel", dist("novel")),
        ("out", path.display().to_string()),
    ]);
    Ok(())
}
