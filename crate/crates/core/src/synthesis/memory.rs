use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, DepthMap, Grid, ImageRGB, Mask, Pose, WarpResult};

/// Per-episode cache of canonical-view pixels observed at earlier
/// inference steps. Each pixel keeps its most recent observation together
/// with the episode step it was captured at.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MemoryBuffer {
    frame: Option<Frame>,
    updates: u64,
    last_step: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
struct Frame {
    image: ImageRGB,
    depth: Grid<f32>,
    valid: Mask,
    captured: Grid<u64>,
}

/// Inclusive pixel rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl PixelBox {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

/// At episode step `now`, memory pixels inside `region` captured more than
/// `max_age` steps earlier are not used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RecencyVeto {
    pub region: PixelBox,
    pub now: u64,
    pub max_age: u64,
}

impl MemoryBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.frame.is_none()
    }

    /// Number of inference steps folded into the buffer so far.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Episode step of the latest update.
    pub fn last_step(&self) -> Option<u64> {
        self.last_step
    }

    pub fn image(&self) -> Option<&ImageRGB> {
        self.frame.as_ref().map(|f| &f.image)
    }

    /// `true` where the buffer holds nothing.
    pub fn mask(&self) -> Option<Mask> {
        self.frame.as_ref().map(|f| f.valid.map(|v| !v))
    }

    /// Episode step at which pixel `(x, y)` was last observed.
    pub fn captured_at(&self, x: usize, y: usize) -> Option<u64> {
        let f = self.frame.as_ref()?;
        f.valid.get(x, y).then(|| *f.captured.get(x, y))
    }

    /// Buffer after the inference at episode step `step` observed `warp`:
    /// pixels the warp covered are refreshed, all others keep their older
    /// content.
    pub fn updated(&self, warp: &WarpResult, step: u64) -> Result<MemoryBuffer> {
        if self.last_step.is_some_and(|last| step < last) {
            return Err(Error::invalid(format!(
                "memory update at step {step} after step {}",
                self.last_step.unwrap_or(0)
            )));
        }
        let (w, h) = (warp.width(), warp.height());
        let frame = match &self.frame {
            None => Frame {
                image: warp.image.clone(),
                depth: warp.depth.values().clone(),
                valid: warp.mask.map(|m| !m),
                captured: Grid::filled(w, h, step),
            },
            Some(old) => {
                check_dims(old, warp)?;
                let fresh = |x: usize, y: usize| !*warp.mask.get(x, y);
                Frame {
                    image: ImageRGB::from_clamped(Grid::from_fn(w, h, |x, y| {
                        if fresh(x, y) {
                            warp.image.get(x, y)
                        } else {
                            old.image.get(x, y)
                        }
                    })),
                    depth: Grid::from_fn(w, h, |x, y| {
                        if fresh(x, y) {
                            *warp.depth.values().get(x, y)
                        } else {
                            *old.depth.get(x, y)
                        }
                    }),
                    valid: Grid::from_fn(w, h, |x, y| fresh(x, y) || *old.valid.get(x, y)),
                    captured: Grid::from_fn(w, h, |x, y| if fresh(x, y) { step } else { *old.captured.get(x, y) }),
                }
            }
        };
        Ok(MemoryBuffer {
            frame: Some(frame),
            updates: self.updates + 1,
            last_step: Some(step),
        })
    }
}

fn check_dims(frame: &Frame, warp: &WarpResult) -> Result<()> {
    if frame.valid.width() != warp.width() || frame.valid.height() != warp.height() {
        return Err(Error::DimensionMismatch {
            expected_width: frame.valid.width(),
            expected_height: frame.valid.height(),
            width: warp.width(),
            height: warp.height(),
        });
    }
    Ok(())
}

pub fn memory_fill(warp: &WarpResult, memory: &MemoryBuffer) -> Result<WarpResult> {
    memory_fill_with(warp, memory, None)
}

/// Copies remembered pixels into the holes of `warp`; every pixel that was
/// not a hole is returned unchanged.
pub fn memory_fill_with(warp: &WarpResult, memory: &MemoryBuffer, veto: Option<&RecencyVeto>) -> Result<WarpResult> {
    let Some(frame) = &memory.frame else {
        return Ok(warp.clone());
    };
    check_dims(frame, warp)?;
    let (w, h) = (warp.width(), warp.height());
    let usable = Grid::from_fn(w, h, |x, y| {
        *warp.mask.get(x, y)
            && *frame.valid.get(x, y)
            && !veto
                .is_some_and(|v| v.region.contains(x, y) && v.now.saturating_sub(*frame.captured.get(x, y)) > v.max_age)
    });
    let image = ImageRGB::from_clamped(Grid::from_fn(w, h, |x, y| {
        if *usable.get(x, y) {
            frame.image.get(x, y)
        } else {
            warp.image.get(x, y)
        }
    }));
    let depth = Grid::from_fn(w, h, |x, y| {
        if *usable.get(x, y) {
            *frame.depth.get(x, y)
        } else {
            *warp.depth.values().get(x, y)
        }
    });
    let valid = Grid::from_fn(w, h, |x, y| *usable.get(x, y) || !*warp.mask.get(x, y));
    let mask = valid.map(|v| !v);
    Ok(WarpResult {
        image,
        mask,
        depth: DepthMap::new(depth, valid)?,
    })
}

/// Pixel bounds of the world-space box `[min, max]` seen from camera
/// `pose`, clipped to the image. `None` when no corner lies in front of the
/// camera or the box misses the image.
pub fn projected_box(min: &Vector3<f64>, max: &Vector3<f64>, pose: &Pose, k: &CameraIntrinsics) -> Option<PixelBox> {
    let to_cam = pose.inverse();
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for i in 0..8 {
        let pick = |b: usize| if i >> b & 1 == 1 { max[b] } else { min[b] };
        let p = to_cam.apply(&Vector3::new(pick(0), pick(1), pick(2)));
        if p.z <= 1e-6 {
            continue;
        }
        let uv = k.project(&p);
        for a in 0..2 {
            lo[a] = lo[a].min(uv[a]);
            hi[a] = hi[a].max(uv[a]);
        }
    }
    let (w, h) = (k.width() as f64, k.height() as f64);
    if !lo[0].is_finite() || hi[0] < -0.5 || hi[1] < -0.5 || lo[0] > w - 0.5 || lo[1] > h - 0.5 {
        return None;
    }
    let clip = |v: f64, max: f64| v.round().clamp(0.0, max - 1.0) as usize;
    Some(PixelBox {
        x0: clip(lo[0], w),
        y0: clip(lo[1], h),
        x1: clip(hi[0], w),
        y1: clip(hi[1], h),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::count_set;
    use rand::Rng;

    fn warp(w: usize, h: usize, color: f32, holes: impl Fn(usize, usize) -> bool) -> WarpResult {
        let mask = Grid::from_fn(w, h, &holes);
        let depth = DepthMap::from_values(Grid::from_fn(w, h, |x, y| if holes(x, y) { 0.0 } else { 1.0 + color }));
        let image = ImageRGB::from_clamped(Grid::from_fn(w, h, |x, y| {
            if holes(x, y) {
                [0.0; 3]
            } else {
                [color, color, (x + y) as f32 / 64.0]
            }
        }));
        WarpResult { image, mask, depth }
    }

    #[test]
    fn empty_memory_is_identity() {
        let w = warp(6, 5, 0.3, |x, y| (x + y) % 3 == 0);
        assert_eq!(memory_fill(&w, &MemoryBuffer::new()).unwrap(), w);
    }

    #[test]
    fn full_memory_fills_full_holes() {
        let mem = MemoryBuffer::new().updated(&warp(6, 5, 0.7, |_, _| false), 0).unwrap();
        let out = memory_fill(&warp(6, 5, 0.3, |_, _| true), &mem).unwrap();
        assert_eq!(&out.image, mem.image().unwrap());
        assert_eq!(count_set(&out.mask), 0);
        assert!(out.is_consistent());
    }

    #[test]
    fn exactly_the_remembered_holes_are_cleared() {
        let mut rng = crate::rng::rng_from_seed(3);
        let holes: Vec<bool> = (0..400).map(|_| rng.random_bool(0.3)).collect();
        let remembered: Vec<bool> = (0..400).map(|_| rng.random_bool(0.5)).collect();
        let hw = warp(20, 20, 0.3, |x, y| holes[y * 20 + x]);
        let mem = MemoryBuffer::new()
            .updated(&warp(20, 20, 0.9, |x, y| !remembered[y * 20 + x]), 0)
            .unwrap();
        let out = memory_fill(&hw, &mem).unwrap();
        for i in 0..400 {
            let (x, y) = (i % 20, i / 20);
            assert_eq!(*out.mask.get(x, y), holes[i] && !remembered[i]);
            if !holes[i] {
                assert_eq!(out.image.get(x, y), hw.image.get(x, y));
            }
        }
    }

    #[test]
    fn mismatched_memory_is_rejected() {
        let mem = MemoryBuffer::new().updated(&warp(6, 5, 0.7, |_, _| false), 0).unwrap();
        assert!(memory_fill(&warp(5, 5, 0.3, |_, _| true), &mem).is_err());
    }

    #[test]
    fn memory_keeps_latest_observation_per_pixel() {
        let m1 = MemoryBuffer::new().updated(&warp(4, 4, 0.2, |x, _| x >= 2), 0).unwrap();
        let m2 = m1.updated(&warp(4, 4, 0.6, |x, _| x < 3), 8).unwrap();
        assert_eq!(m2.updates(), 2);
        assert_eq!(m2.last_step(), Some(8));
        assert_eq!(m2.captured_at(0, 0), Some(0));
        assert_eq!(m2.captured_at(3, 0), Some(8));
        assert!(m2.updated(&warp(4, 4, 0.6, |_, _| true), 7).is_err());
        assert_eq!(m2.image().unwrap().get(0, 0)[0], 0.2);
        assert_eq!(m2.image().unwrap().get(3, 0)[0], 0.6);
        assert_eq!(m2.mask().unwrap(), Grid::from_fn(4, 4, |x, _| x == 2));
    }

    #[test]
    fn veto_blocks_stale_pixels_in_region() {
        // captured at step 0
        let m = MemoryBuffer::new().updated(&warp(4, 4, 0.2, |_, _| false), 0).unwrap();
        let region = PixelBox {
            x0: 0,
            y0: 0,
            x1: 1,
            y1: 1,
        };
        let holes = warp(4, 4, 0.3, |_, _| true);
        let veto = RecencyVeto {
            region,
            now: 2,
            max_age: 1,
        };
        let out = memory_fill_with(&holes, &m, Some(&veto)).unwrap();
        assert!(*out.mask.get(0, 0) && *out.mask.get(1, 1));
        assert!(!*out.mask.get(2, 2) && !*out.mask.get(0, 3));
        let fresh = RecencyVeto {
            region,
            now: 1,
            max_age: 1,
        };
        let out = memory_fill_with(&holes, &m, Some(&fresh)).unwrap();
        assert_eq!(count_set(&out.mask), 0);
    }

    #[test]
    fn projected_box_covers_the_center_pixel() {
        let k = CameraIntrinsics::square(64, 50.0).unwrap();
        let pose = Pose::identity();
        let d = Vector3::repeat(0.05);
        let c = Vector3::new(0.0, 0.0, 1.0);
        let b = projected_box(&(c - d), &(c + d), &pose, &k).unwrap();
        assert!(b.contains(32, 32));
        assert!(!b.contains(32, 36));
        assert!(projected_box(&(-c - d), &(-c + d), &pose, &k).is_none());
    }
}
