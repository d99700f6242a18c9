use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Grid, ImageRGB};

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// Grid sizes of the hand-crafted descriptor. The vector holds
/// `luma_grid²` block-mean lumas, `3 color_grid²` block-mean colors, then
/// gradient-magnitude block means on both grids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub luma_grid: usize,
    pub color_grid: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            luma_grid: 16,
            color_grid: 8,
        }
    }
}

impl FeatureConfig {
    pub fn len(&self) -> usize {
        let (l, c) = (self.luma_grid * self.luma_grid, self.color_grid * self.color_grid);
        2 * l + 4 * c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn check_image(&self, width: usize, height: usize) -> Result<()> {
        for g in [self.luma_grid, self.color_grid] {
            if g == 0 || !width.is_multiple_of(g) || !height.is_multiple_of(g) {
                return Err(Error::invalid(format!(
                    "image {width}x{height} is not divisible into a {g}x{g} feature grid"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature vector contains non-finite values"));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn distance(&self, other: &FeatureVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn cosine(&self, other: &FeatureVector) -> f64 {
        let dot: f64 = self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum();
        let na = self.0.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nb = other.0.iter().map(|b| b * b).sum::<f64>().sqrt();
        dot / (na * nb)
    }
}

pub fn extract_features(image: &ImageRGB) -> Result<FeatureVector> {
    extract_features_with(image, &FeatureConfig::default())
}

/// L2-normalised descriptor; an all-zero raw vector is returned as is.
pub fn extract_features_with(image: &ImageRGB, cfg: &FeatureConfig) -> Result<FeatureVector> {
    let mut v = raw_features(image, cfg)?;
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    FeatureVector::new(v)
}

/// Descriptor before normalisation.
pub fn raw_features(image: &ImageRGB, cfg: &FeatureConfig) -> Result<Vec<f64>> {
    let (w, h) = (image.width(), image.height());
    cfg.check_image(w, h)?;
    let px = image.pixels();
    let luma = Grid::from_fn(w, h, |x, y| {
        let c = px.get(x, y);
        (0..3).map(|i| LUMA[i] * c[i] as f64).sum::<f64>()
    });
    // forward differences, zero past the last row/column
    let grad = Grid::from_fn(w, h, |x, y| {
        let l = *luma.get(x, y);
        let dx = if x + 1 < w { luma.get(x + 1, y) - l } else { 0.0 };
        let dy = if y + 1 < h { luma.get(x, y + 1) - l } else { 0.0 };
        (dx * dx + dy * dy).sqrt()
    });
    let mut out = Vec::with_capacity(cfg.len());
    block_means(&luma, cfg.luma_grid, |v| out.push(v[0]));
    let rgb = px.map(|c| [c[0] as f64, c[1] as f64, c[2] as f64]);
    block_means(&rgb, cfg.color_grid, |v| out.extend_from_slice(&v));
    block_means(&grad, cfg.luma_grid, |v| out.push(v[0]));
    block_means(&grad, cfg.color_grid, |v| out.push(v[0]));
    Ok(out)
}

trait Channels<const N: usize> {
    fn channels(&self) -> [f64; N];
}

impl Channels<1> for f64 {
    fn channels(&self) -> [f64; 1] {
        [*self]
    }
}

impl Channels<3> for [f64; 3] {
    fn channels(&self) -> [f64; 3] {
        *self
    }
}

/// Means over a `grid × grid` partition, emitted in row-major order.
fn block_means<T: Channels<N>, const N: usize>(g: &Grid<T>, grid: usize, mut emit: impl FnMut([f64; N])) {
    let (bw, bh) = (g.width() / grid, g.height() / grid);
    let n = (bw * bh) as f64;
    for by in 0..grid {
        for bx in 0..grid {
            let mut sum = [0.0; N];
            for y in by * bh..(by + 1) * bh {
                for x in bx * bw..(bx + 1) * bw {
                    let c = g.get(x, y).channels();
                    for i in 0..N {
                        sum[i] += c[i];
                    }
                }
            }
            emit(sum.map(|s| s / n));
        }
    }
}
