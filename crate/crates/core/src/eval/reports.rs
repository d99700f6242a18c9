//! CSV report files. Each file opens with a `# canonview-report 1 <kind>
//! seed=<n>` line followed by a column header; floats are printed with six
//! decimals so repeated runs are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::bench::{BenchReport, Setting};
use super::pca::FeatureScatter;
use super::vgs::{Cell, SuccessTable};
use crate::error::{Error, Result};

pub const REPORT_MAGIC: &str = "# canonview-report 1";

pub const SUCCESS_CSV: &str = "success.csv";
pub const VGS_CSV: &str = "vgs.csv";
pub const NVS_CSV: &str = "nvs.csv";
pub const SCATTER_CSV: &str = "scatter.csv";

fn header(kind: &str, seed: u64) -> String {
    format!("{REPORT_MAGIC} {kind} seed={seed}\n")
}

pub fn success_csv(report: &BenchReport) -> String {
    let mut s = header("success", report.seed);
    s.push_str("setting,angle_deg,trials,successes,rate,role\n");
    for (setting, table) in &report.tables {
        let rows = std::iter::once((table.baseline_angle, table.baseline, true))
            .chain(table.novel.iter().map(|(a, c)| (*a, *c, false)));
        for (angle, cell, base) in rows {
            let _ = writeln!(
                s,
                "{},{:.1},{},{},{:.6},{}",
                setting.name(),
                angle,
                cell.trials,
                cell.successes,
                cell.rate(),
                if base { "baseline" } else { "novel" }
            );
        }
    }
    s
}

pub fn vgs_csv(report: &BenchReport) -> String {
    let mut s = header("vgs", report.seed);
    s.push_str("setting,vgs,baseline_rate,mean_novel_rate\n");
    for (setting, table) in &report.tables {
        let (base, novel) = table.rates();
        let mean = novel.iter().sum::<f64>() / novel.len() as f64;
        let vgs = report.vgs_of(*setting).map(|v| format!("{v:.6}")).unwrap_or_default();
        let _ = writeln!(s, "{},{},{:.6},{:.6}", setting.name(), vgs, base, mean);
    }
    s
}

/// Distributional metrics (FID, FVD, LPIPS) need pretrained networks and are
/// left as empty columns.
pub fn nvs_csv(report: &BenchReport) -> String {
    let mut s = header("nvs", report.seed);
    s.push_str("angle_deg,psnr_db,ssim,pixels,mask_policy,source,fid,fvd,lpips\n");
    for c in &report.nvs {
        let a = c.angle;
        let _ = writeln!(
            s,
            "{a:.1},{:.6},{:.6},{},co-visible,pipeline,,,",
            c.pipeline_co_visible, c.ssim, c.co_visible_pixels
        );
        let _ = writeln!(
            s,
            "{a:.1},{:.6},{:.6},{},full,pipeline,,,",
            c.pipeline_full, c.ssim, c.total_pixels
        );
        let _ = writeln!(s, "{a:.1},{:.6},,{},full,warp,,,", c.warp_full, c.total_pixels);
        let _ = writeln!(s, "{a:.1},{:.6},,{},full,raw,,,", c.raw_full, c.total_pixels);
    }
    s
}

pub fn scatter_csv(seed: u64, sc: &FeatureScatter) -> String {
    let mut s = header("scatter", seed);
    let _ = writeln!(s, "# explained={:.6},{:.6}", sc.explained[0], sc.explained[1]);
    s.push_str("label,pc1,pc2\n");
    for p in &sc.points {
        let _ = writeln!(s, "{},{:.6},{:.6}", p.label, p.pc[0], p.pc[1]);
    }
    s
}

/// Writes the four report files into `dir`, creating it if needed.
pub fn write_reports(dir: &Path, report: &BenchReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        (SUCCESS_CSV, success_csv(report)),
        (VGS_CSV, vgs_csv(report)),
        (NVS_CSV, nvs_csv(report)),
        (SCATTER_CSV, scatter_csv(report.seed, &report.scatter)),
    ];
    files
        .into_iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

/// Parses a `success.csv` back into its seed and per-setting tables.
pub fn read_success_csv(path: &Path) -> Result<(u64, Vec<(Setting, SuccessTable)>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_success_csv(&text).map_err(|message| Error::Format {
        path: path.to_path_buf(),
        message,
    })
}

fn parse_success_csv(text: &str) -> std::result::Result<(u64, Vec<(Setting, SuccessTable)>), String> {
    let mut lines = text.lines();
    let magic = lines.next().ok_or("empty file")?;
    let seed = magic
        .strip_prefix(REPORT_MAGIC)
        .and_then(|r| r.trim().strip_prefix("success seed="))
        .ok_or("not a success report")?
        .parse::<u64>()
        .map_err(|e| format!("bad seed: {e}"))?;
    if lines.next() != Some("setting,angle_deg,trials,successes,rate,role") {
        return Err("unexpected column header".into());
    }
    let mut tables: Vec<(Setting, SuccessTable)> = Vec::new();
    for (n, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(format!("row {}: expected 6 fields", n + 1));
        }
        let bad = |what: &str| format!("row {}: bad {what}", n + 1);
        let setting: Setting = f[0].parse().map_err(|_| bad("setting"))?;
        let angle: f64 = f[1].parse().map_err(|_| bad("angle"))?;
        let trials: usize = f[2].parse().map_err(|_| bad("trials"))?;
        let successes: usize = f[3].parse().map_err(|_| bad("successes"))?;
        let base = match f[5] {
            "baseline" => true,
            "novel" => false,
            _ => return Err(bad("role")),
        };
        let cell = Cell::new(trials, successes).map_err(|e| format!("row {}: {e}", n + 1))?;
        if base {
            tables.push((
                setting,
                SuccessTable {
                    baseline_angle: angle,
                    baseline: cell,
                    novel: Vec::new(),
                },
            ));
        } else {
            match tables.last_mut() {
                Some((s, t)) if *s == setting => t.novel.push((angle, cell)),
                _ => return Err(format!("row {}: novel angle before its baseline", n + 1)),
            }
        }
    }
    Ok((seed, tables))
}
