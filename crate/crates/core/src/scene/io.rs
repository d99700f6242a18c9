//! On-disk dataset layout:
//!
//! ```text
//! <root>/<task>/<episode:04>/frame_NNNN.ppm   8-bit binary RGB (P6)
//! <root>/<task>/<episode:04>/depth_NNNN.pfm   32-bit float depth (Pf), 0 = invalid
//! <root>/<task>/<episode:04>/episode.json     per-episode record
//! <root>/<task>/dataset.json                   collection manifest
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::demos::{DemoEpisode, DemoStep, DemoSummary};
use super::task::{TaskKind, TaskSpec};
use super::world::{Action, RobotState};
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, DepthMap, Grid, ImageRGB, Mask, Pose};

pub const EPISODE_FORMAT: &str = "canonview-episode";
pub const EPISODE_VERSION: u32 = 1;
pub const EPISODE_FILE: &str = "episode.json";
pub const MANIFEST_FORMAT: &str = "canonview-dataset";
pub const MANIFEST_FILE: &str = "dataset.json";

pub fn write_ppm(path: &Path, image: &ImageRGB) -> Result<()> {
    let mut buf = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    buf.extend(image.to_rgb8());
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_ppm(path: &Path) -> Result<ImageRGB> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (header, offset) = parse_header(path, &bytes, 4)?;
    if header[0] != "P6" || header[3] != "255" {
        return Err(Error::format(path, "expected a binary P6 image with maxval 255"));
    }
    let (w, h) = dims(path, &header)?;
    ImageRGB::from_rgb8(w, h, &bytes[offset..]).map_err(|e| Error::format(path, e.to_string()))
}

/// Writes a mask as an 8-bit binary PGM (P5), set pixels as 255.
pub fn write_pgm(path: &Path, mask: &Mask) -> Result<()> {
    let mut buf = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    buf.extend(mask.as_slice().iter().map(|&m| if m { 255u8 } else { 0 }));
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Writes a grayscale PFM, little-endian, rows bottom to top.
pub fn write_pfm(path: &Path, depth: &DepthMap) -> Result<()> {
    let (w, h) = (depth.width(), depth.height());
    let mut buf = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    buf.reserve(w * h * 4);
    for y in (0..h).rev() {
        for x in 0..w {
            let v = depth.at(x, y).unwrap_or(0.0);
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_pfm(path: &Path) -> Result<DepthMap> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (header, offset) = parse_header(path, &bytes, 4)?;
    if header[0] != "Pf" {
        return Err(Error::format(path, "expected a grayscale Pf float map"));
    }
    let (w, h) = dims(path, &header)?;
    let scale: f64 = header[3].parse().map_err(|_| Error::format(path, "bad scale"))?;
    let body = &bytes[offset..];
    if body.len() != w * h * 4 {
        return Err(Error::format(
            path,
            format!("expected {} data bytes, got {}", w * h * 4, body.len()),
        ));
    }
    let mut values = vec![0.0f32; w * h];
    for (i, c) in body.chunks_exact(4).enumerate() {
        let raw = [c[0], c[1], c[2], c[3]];
        let v = if scale < 0.0 {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let (x, row) = (i % w, i / w);
        values[(h - 1 - row) * w + x] = v;
    }
    Ok(DepthMap::from_values(Grid::from_vec(w, h, values)?))
}

/// Splits `count` whitespace-separated header tokens, returning the byte
/// offset just past the single whitespace byte after the last one.
fn parse_header<'a>(path: &Path, bytes: &'a [u8], count: usize) -> Result<(Vec<&'a str>, usize)> {
    let mut tokens = Vec::with_capacity(count);
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(Error::format(path, "truncated header"));
        }
        let tok = std::str::from_utf8(&bytes[start..i]).map_err(|_| Error::format(path, "non-ascii header"))?;
        tokens.push(tok);
    }
    if i >= bytes.len() {
        return Err(Error::format(path, "missing data section"));
    }
    Ok((tokens, i + 1))
}

fn dims(path: &Path, header: &[&str]) -> Result<(usize, usize)> {
    let w = header[1].parse().map_err(|_| Error::format(path, "bad width"))?;
    let h = header[2].parse().map_err(|_| Error::format(path, "bad height"))?;
    Ok((w, h))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub frame: String,
    pub depth: String,
    pub state: RobotState,
    pub action: Action,
    pub target_center: Vector3<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub format: String,
    pub version: u32,
    pub index: usize,
    pub seed: u64,
    pub success: bool,
    pub task: TaskSpec,
    pub camera: Pose,
    pub intrinsics: CameraIntrinsics,
    pub steps: Vec<StepRecord>,
}

pub fn task_dir(root: &Path, task: TaskKind) -> PathBuf {
    root.join(task.name())
}

pub fn episode_dir(root: &Path, task: TaskKind, index: usize) -> PathBuf {
    task_dir(root, task).join(format!("{index:04}"))
}

pub fn write_episode(root: &Path, episode: &DemoEpisode, camera: &Pose, k: &CameraIntrinsics) -> Result<PathBuf> {
    let dir = episode_dir(root, episode.task.kind, episode.index);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut steps = Vec::with_capacity(episode.steps.len());
    for (i, s) in episode.steps.iter().enumerate() {
        let frame = format!("frame_{i:04}.ppm");
        let depth = format!("depth_{i:04}.pfm");
        write_ppm(&dir.join(&frame), &s.image)?;
        write_pfm(&dir.join(&depth), &s.depth)?;
        steps.push(StepRecord {
            frame,
            depth,
            state: s.state.clone(),
            action: s.action,
            target_center: s.target_center,
        });
    }
    let record = EpisodeRecord {
        format: EPISODE_FORMAT.into(),
        version: EPISODE_VERSION,
        index: episode.index,
        seed: episode.seed,
        success: episode.success,
        task: episode.task.clone(),
        camera: *camera,
        intrinsics: *k,
        steps,
    };
    let path = dir.join(EPISODE_FILE);
    let mut file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::to_writer_pretty(&mut file, &record).map_err(|e| Error::format(&path, e.to_string()))?;
    file.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
    Ok(dir)
}

pub fn read_episode_record(dir: &Path) -> Result<EpisodeRecord> {
    let path = dir.join(EPISODE_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let record: EpisodeRecord = serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
    if record.format != EPISODE_FORMAT || record.version != EPISODE_VERSION {
        return Err(Error::format(
            &path,
            format!("unsupported record {} v{}", record.format, record.version),
        ));
    }
    Ok(record)
}

pub fn read_episode(dir: &Path) -> Result<DemoEpisode> {
    let record = read_episode_record(dir)?;
    let steps = record
        .steps
        .iter()
        .map(|s| {
            Ok(DemoStep {
                image: read_ppm(&dir.join(&s.frame))?,
                depth: read_pfm(&dir.join(&s.depth))?,
                state: s.state.clone(),
                action: s.action,
                target_center: s.target_center,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DemoEpisode {
        index: record.index,
        seed: record.seed,
        task: record.task,
        success: record.success,
        steps,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub version: u32,
    pub task: TaskKind,
    /// Seed handed to the collector.
    pub seed: u64,
    pub episodes: usize,
    pub steps: usize,
    /// Expert attempts thrown away because they failed.
    pub discarded: usize,
}

impl DatasetManifest {
    pub fn new(task: TaskKind, seed: u64, summary: &DemoSummary) -> Self {
        Self {
            format: MANIFEST_FORMAT.into(),
            version: EPISODE_VERSION,
            task,
            seed,
            episodes: summary.episodes,
            steps: summary.steps,
            discarded: summary.discarded,
        }
    }
}

pub fn write_manifest(root: &Path, manifest: &DatasetManifest) -> Result<PathBuf> {
    let dir = task_dir(root, manifest.task);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(manifest).map_err(|e| Error::format(&path, e.to_string()))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_manifest(root: &Path, task: TaskKind) -> Result<DatasetManifest> {
    let path = task_dir(root, task).join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let m: DatasetManifest = serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
    if m.format != MANIFEST_FORMAT || m.version != EPISODE_VERSION {
        return Err(Error::format(
            &path,
            format!("unsupported manifest {} v{}", m.format, m.version),
        ));
    }
    if m.task != task {
        return Err(Error::format(&path, format!("manifest is for task {}", m.task.name())));
    }
    Ok(m)
}

/// Episode directories of one task, sorted by index.
pub fn list_episodes(root: &Path, task: TaskKind) -> Result<Vec<PathBuf>> {
    let dir = task_dir(root, task);
    let entries = fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(EPISODE_FILE).is_file())
        .collect();
    dirs.sort();
    Ok(dirs)
}
