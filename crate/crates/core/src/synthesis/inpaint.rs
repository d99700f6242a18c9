use log::warn;
use serde::{Deserialize, Serialize};

use crate::geometry::{Grid, ImageRGB, Mask, Rgb, WarpResult};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InpaintMethod {
    #[default]
    PullPush,
    NearestValid,
}

/// Color used when there is nothing valid to inpaint from.
pub const NEUTRAL_COLOR: Rgb = [0.5, 0.5, 0.5];

pub fn inpaint(warp: &WarpResult, method: InpaintMethod) -> ImageRGB {
    inpaint_with(warp, method, NEUTRAL_COLOR)
}

/// Fills every masked pixel; unmasked pixels are copied bit-for-bit.
pub fn inpaint_with(warp: &WarpResult, method: InpaintMethod, neutral: Rgb) -> ImageRGB {
    let (w, h) = (warp.width(), warp.height());
    let mask = &warp.mask;
    let src = warp.image.pixels();
    let holes = mask.as_slice().iter().filter(|&&m| m).count();
    if holes == 0 {
        return warp.image.clone();
    }
    if holes == mask.len() {
        warn!("inpainting a fully masked {w}x{h} frame with the neutral color");
        return ImageRGB::from_clamped(Grid::filled(w, h, neutral));
    }
    let filled = match method {
        InpaintMethod::PullPush => pull_push(src, mask),
        InpaintMethod::NearestValid => nearest_valid(src, mask),
    };
    ImageRGB::from_clamped(filled)
}

type Level = Grid<Option<[f64; 3]>>;

fn to_f64(c: Rgb) -> [f64; 3] {
    [c[0] as f64, c[1] as f64, c[2] as f64]
}

fn pull_push(src: &Grid<Rgb>, mask: &Mask) -> Grid<Rgb> {
    let level: Level = Grid::from_fn(src.width(), src.height(), |x, y| {
        (!*mask.get(x, y)).then(|| to_f64(*src.get(x, y)))
    });
    let filled = fill_level(&level);
    Grid::from_fn(src.width(), src.height(), |x, y| {
        if *mask.get(x, y) {
            let c = filled.get(x, y);
            [c[0] as f32, c[1] as f32, c[2] as f32]
        } else {
            *src.get(x, y)
        }
    })
}

/// Pull: average the valid children into a half-size level. Push: fill the
/// holes of this level by bilinear upsampling of the filled coarser level.
/// Every output color is a convex combination of valid input colors.
fn fill_level(level: &Level) -> Grid<[f64; 3]> {
    let (w, h) = (level.width(), level.height());
    if level.as_slice().iter().all(Option::is_some) {
        return level.map(|c| c.unwrap());
    }
    let (cw, ch) = (w.div_ceil(2), h.div_ceil(2));
    let coarse: Level = Grid::from_fn(cw, ch, |cx, cy| {
        let mut sum = [0.0; 3];
        let mut n = 0.0;
        for y in (2 * cy)..(2 * cy + 2).min(h) {
            for x in (2 * cx)..(2 * cx + 2).min(w) {
                if let Some(c) = level.get(x, y) {
                    for i in 0..3 {
                        sum[i] += c[i];
                    }
                    n += 1.0;
                }
            }
        }
        (n > 0.0).then(|| sum.map(|s| s / n))
    });
    let coarse = fill_level(&coarse);
    Grid::from_fn(w, h, |x, y| {
        if let Some(c) = level.get(x, y) {
            return *c;
        }
        let sx = ((x as f64 + 0.5) / 2.0 - 0.5).clamp(0.0, (cw - 1) as f64);
        let sy = ((y as f64 + 0.5) / 2.0 - 0.5).clamp(0.0, (ch - 1) as f64);
        let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(cw - 1), (y0 + 1).min(ch - 1));
        let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            let top = coarse.get(x0, y0)[i] * (1.0 - fx) + coarse.get(x1, y0)[i] * fx;
            let bottom = coarse.get(x0, y1)[i] * (1.0 - fx) + coarse.get(x1, y1)[i] * fx;
            *o = top * (1.0 - fy) + bottom * fy;
        }
        out
    })
}

/// Color of the closest unmasked pixel by Euclidean distance, ties to the
/// first in row-major order. Requires at least one unmasked pixel.
fn nearest_valid(src: &Grid<Rgb>, mask: &Mask) -> Grid<Rgb> {
    let (w, h) = (src.width() as i64, src.height() as i64);
    let max_r = w.max(h);
    Grid::from_fn(src.width(), src.height(), |x, y| {
        if !*mask.get(x, y) {
            return *src.get(x, y);
        }
        let (x, y) = (x as i64, y as i64);
        // (squared distance, row, column)
        let mut best: Option<(i64, i64, i64)> = None;
        for r in 1..=max_r {
            if best.is_some_and(|b| r * r > b.0) {
                break;
            }
            for dy in -r..=r {
                let ny = y + dy;
                if ny < 0 || ny >= h {
                    continue;
                }
                let step = if dy.abs() == r { 1 } else { 2 * r };
                let mut dx = -r;
                while dx <= r {
                    let nx = x + dx;
                    if nx >= 0 && nx < w && !*mask.get(nx as usize, ny as usize) {
                        let cand = (dx * dx + dy * dy, ny, nx);
                        if best.is_none_or(|b| cand < b) {
                            best = Some(cand);
                        }
                    }
                    dx += step;
                }
            }
        }
        let (_, by, bx) = best.expect("at least one valid pixel");
        *src.get(bx as usize, by as usize)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DepthMap;

    fn warp_of(image: ImageRGB, mask: Mask) -> WarpResult {
        let depth = DepthMap::from_values(mask.map(|&m| if m { 0.0 } else { 1.0 }));
        WarpResult { image, mask, depth }
    }

    fn striped(w: usize, h: usize) -> ImageRGB {
        ImageRGB::from_clamped(Grid::from_fn(w, h, |x, y| {
            [(x * 7 % 13) as f32 / 13.0, (y % 5) as f32 / 5.0, 0.25]
        }))
    }

    #[test]
    fn empty_mask_is_identity() {
        let img = striped(9, 7);
        let w = warp_of(img.clone(), Grid::filled(9, 7, false));
        for m in [InpaintMethod::PullPush, InpaintMethod::NearestValid] {
            assert_eq!(inpaint(&w, m), img);
        }
    }

    #[test]
    fn constant_image_stays_constant() {
        let c = [0.1234567, 0.7654321, 0.333];
        let mask = Grid::from_fn(13, 11, |x, y| (x * 3 + y * 5) % 4 != 0);
        let w = warp_of(ImageRGB::filled(13, 11, c), mask);
        for m in [InpaintMethod::PullPush, InpaintMethod::NearestValid] {
            let out = inpaint(&w, m);
            assert!(out.pixels().as_slice().iter().all(|p| *p == c), "{m:?}");
        }
    }

    #[test]
    fn fully_masked_uses_neutral() {
        let w = warp_of(striped(4, 4), Grid::filled(4, 4, true));
        let out = inpaint(&w, InpaintMethod::PullPush);
        assert!(out.pixels().as_slice().iter().all(|p| *p == NEUTRAL_COLOR));
    }

    fn brute_nearest(mask: &Mask, x: usize, y: usize) -> (usize, usize) {
        let mut best = None;
        for yy in 0..mask.height() {
            for xx in 0..mask.width() {
                if *mask.get(xx, yy) {
                    continue;
                }
                let d = (xx as i64 - x as i64).pow(2) + (yy as i64 - y as i64).pow(2);
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, xx, yy));
                }
            }
        }
        let (_, bx, by) = best.unwrap();
        (bx, by)
    }

    #[test]
    fn nearest_valid_matches_brute_force() {
        let img = striped(17, 12);
        let mask = Grid::from_fn(17, 12, |x, y| (x > 3 && x < 12 && y > 2 && y < 10) || (x + y) % 7 == 0);
        let out = inpaint(&warp_of(img.clone(), mask.clone()), InpaintMethod::NearestValid);
        for y in 0..12 {
            for x in 0..17 {
                let (bx, by) = if *mask.get(x, y) {
                    brute_nearest(&mask, x, y)
                } else {
                    (x, y)
                };
                assert_eq!(out.get(x, y), img.get(bx, by), "pixel ({x}, {y})");
            }
        }
    }

    #[test]
    fn single_hole_takes_row_major_first_neighbour() {
        let img = striped(5, 5);
        let mut mask = Grid::filled(5, 5, false);
        mask.set(2, 2, true);
        let out = inpaint(&warp_of(img.clone(), mask), InpaintMethod::NearestValid);
        // four neighbours at distance 1; (2, 1) comes first in row-major order
        assert_eq!(out.get(2, 2), img.get(2, 1));
    }
}
