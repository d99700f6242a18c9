use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DepthMap, Grid, ImageRGB, Mask, WarpResult};

/// Reported for identical inputs.
pub const PSNR_CAP_DB: f64 = 99.0;
pub const SSIM_WINDOW: usize = 8;
/// Depth agreement, in metres, for a pixel to count as co-visible.
pub const CO_VISIBLE_TOLERANCE: f64 = 0.01;

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskPolicy {
    Full,
    CoVisible,
}

impl MaskPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            MaskPolicy::Full => "full",
            MaskPolicy::CoVisible => "co-visible",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NvsMetrics {
    pub psnr: f64,
    pub ssim: f64,
    pub pixels: usize,
    pub mask_policy: MaskPolicy,
}

fn check_dims(a: &ImageRGB, b: &ImageRGB) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch {
            expected_width: a.width(),
            expected_height: a.height(),
            width: b.width(),
            height: b.height(),
        });
    }
    Ok(())
}

/// PSNR in dB over the pixels where `select` is `true` (all pixels when
/// `None`), channel range 1. Identical selections score [`PSNR_CAP_DB`].
pub fn psnr(a: &ImageRGB, b: &ImageRGB, select: Option<&Mask>) -> Result<f64> {
    check_dims(a, b)?;
    if let Some(m) = select {
        if m.width() != a.width() || m.height() != a.height() {
            return Err(Error::invalid("PSNR mask size differs from the images"));
        }
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (i, (pa, pb)) in a.pixels().as_slice().iter().zip(b.pixels().as_slice()).enumerate() {
        if select.is_some_and(|m| !m.as_slice()[i]) {
            continue;
        }
        for c in 0..3 {
            let d = pa[c] as f64 - pb[c] as f64;
            sum += d * d;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::invalid("PSNR mask selects no pixels"));
    }
    let mse = sum / (3 * n) as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((20.0 * (1.0 / mse.sqrt()).log10()).min(PSNR_CAP_DB))
}

pub fn luma(image: &ImageRGB) -> Grid<f64> {
    image
        .pixels()
        .map(|c| LUMA[0] * c[0] as f64 + LUMA[1] * c[1] as f64 + LUMA[2] * c[2] as f64)
}

/// Mean SSIM of the luma images over every 8x8 window (stride 1).
pub fn ssim(a: &ImageRGB, b: &ImageRGB) -> Result<f64> {
    check_dims(a, b)?;
    let (w, h) = (a.width(), a.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::invalid(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {w}x{h}"
        )));
    }
    let (la, lb) = (luma(a), luma(b));
    let c1 = 0.01f64 * 0.01;
    let c2 = 0.03f64 * 0.03;
    let n = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let mut total = 0.0;
    let mut windows = 0usize;
    for y0 in 0..=h - SSIM_WINDOW {
        for x0 in 0..=w - SSIM_WINDOW {
            let coords = || (y0..y0 + SSIM_WINDOW).flat_map(move |y| (x0..x0 + SSIM_WINDOW).map(move |x| (x, y)));
            let (mut sa, mut sb) = (0.0, 0.0);
            for (x, y) in coords() {
                sa += la.get(x, y);
                sb += lb.get(x, y);
            }
            let (ma, mb) = (sa / n, sb / n);
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for (x, y) in coords() {
                let (da, db) = (la.get(x, y) - ma, lb.get(x, y) - mb);
                va += da * da;
                vb += db * db;
                cov += da * db;
            }
            let (va, vb, cov) = (va / n, vb / n, cov / n);
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            windows += 1;
        }
    }
    Ok(total / windows as f64)
}

/// Pixels the warp covered whose warped depth agrees with the ground-truth
/// target depth within `tolerance` (`true` = co-visible).
pub fn co_visible(warp: &WarpResult, target_depth: &DepthMap, tolerance: f64) -> Result<Mask> {
    if warp.width() != target_depth.width() || warp.height() != target_depth.height() {
        return Err(Error::DimensionMismatch {
            expected_width: warp.width(),
            expected_height: warp.height(),
            width: target_depth.width(),
            height: target_depth.height(),
        });
    }
    Ok(Grid::from_fn(warp.width(), warp.height(), |x, y| {
        match (warp.depth.at(x, y), target_depth.at(x, y)) {
            (Some(a), Some(b)) => ((a as f64) - (b as f64)).abs() <= tolerance,
            _ => false,
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: usize, h: usize, shift: f32) -> ImageRGB {
        ImageRGB::from_clamped(Grid::from_fn(w, h, |x, y| {
            [x as f32 / w as f32, (y as f32 / h as f32 + shift).min(1.0), 0.5]
        }))
    }

    #[test]
    fn identical_images_are_capped() {
        let a = gradient(16, 16, 0.0);
        assert_eq!(psnr(&a, &a, None).unwrap(), PSNR_CAP_DB);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn one_level_error_is_48_13_db() {
        let a = ImageRGB::filled(8, 8, [100.0 / 255.0; 3]);
        let b = ImageRGB::filled(8, 8, [101.0 / 255.0; 3]);
        assert!((psnr(&a, &b, None).unwrap() - 48.1308).abs() < 1e-3);
    }

    #[test]
    fn empty_selection_is_rejected() {
        let a = gradient(8, 8, 0.0);
        assert!(psnr(&a, &a, Some(&Grid::filled(8, 8, false))).is_err());
    }

    #[test]
    fn ssim_black_white_closed_form() {
        let a = ImageRGB::filled(8, 8, [0.0; 3]);
        let b = ImageRGB::filled(8, 8, [1.0; 3]);
        let c1 = 1e-4;
        let l = 0.299 + 0.587 + 0.114;
        let expected = c1 / (l * l + c1);
        assert!((ssim(&a, &b).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn ssim_is_symmetric_and_small_inputs_fail() {
        let (a, b) = (gradient(20, 12, 0.0), gradient(20, 12, 0.1));
        assert_eq!(ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap());
        assert!(ssim(&gradient(7, 12, 0.0), &gradient(7, 12, 0.0)).is_err());
    }
}
