//! `canonview` command-line driver: demonstration collection, policy
//! fitting, single-frame warping, benchmark runs and feature analysis.

mod commands;
mod config;
mod lock;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "canonview", version, about = "Canonical-view reprojection experiments")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Record expert demonstrations from the canonical camera.
    Collect(CollectArgs),
    /// Fit the nearest-neighbour chunk policy on a recorded dataset.
    Fit(FitArgs),
    /// Warp one novel-view frame into the canonical view and dump every stage.
    Warp(WarpArgs),
    /// Closed-loop benchmark over the angle sweep, writing the CSV reports.
    Bench(BenchArgs),
    /// PCA scatter of source, novel and generated view features.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct CollectArgs {
    #[arg(long)]
    task: Option<canonview::scene::TaskKind>,
    /// Successful episodes to record.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    count: Option<u64>,
    /// Dataset root (default from the config, `data`).
    #[arg(long, value_name = "DIR")]
    dataset: Option<PathBuf>,
    /// Replace an existing dataset for this task.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    task: Option<canonview::scene::TaskKind>,
    #[arg(long, value_name = "DIR")]
    dataset: Option<PathBuf>,
    /// Model file to write (default `<out>/policy.cvp`).
    #[arg(long, value_name = "PATH")]
    model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WarpArgs {
    /// Novel-view RGB image (binary PPM).
    #[arg(long, value_name = "PATH")]
    image: PathBuf,
    /// Novel-view z-depth (PFM, 0 = invalid).
    #[arg(long, value_name = "PATH")]
    depth: PathBuf,
    /// Camera-to-world pose of the novel camera as JSON.
    #[arg(
        long,
        value_name = "PATH",
        conflicts_with = "angle",
        required_unless_present = "angle"
    )]
    pose: Option<PathBuf>,
    /// Novel camera given as an orbit angle of the rig, degrees.
    #[arg(long, allow_negative_numbers = true)]
    angle: Option<f64>,
    /// Canonical ground-truth image to score the output against.
    #[arg(long, value_name = "PATH")]
    gt: Option<PathBuf>,
    /// Canonical ground-truth depth; restricts the score to co-visible pixels.
    #[arg(long, value_name = "PATH", requires = "gt")]
    gt_depth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    task: Option<canonview::scene::TaskKind>,
    #[arg(long, value_name = "PATH")]
    model: Option<PathBuf>,
    /// Rollouts per (setting, angle) cell.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: Option<u64>,
    /// Novel angles in degrees, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    angles: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    task: Option<canonview::scene::TaskKind>,
    /// Scenes sampled for the scatter.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    scenes: Option<u64>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global()?;
    }
    match cli.command {
        Command::Collect(a) => commands::collect(cfg, a),
        Command::Fit(a) => commands::fit(cfg, a),
        Command::Warp(a) => commands::warp(cfg, a),
        Command::Bench(a) => commands::bench(cfg, a),
        Command::Analyze(a) => commands::analyze(cfg, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
