//! Dense row-major grids and the image/depth types built on them.

use crate::error::{Error, Result};

/// A `width x height` row-major grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "grid of {width}x{height} needs {} cells, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        &mut self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn same_shape<U>(&self, other: &Grid<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub(crate) fn check_shape<U>(&self, other: &Grid<U>) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected_width: self.width,
                expected_height: self.height,
                width: other.width,
                height: other.height,
            })
        }
    }
}

/// Per-pixel boolean grid. In warp results `true` marks a hole.
pub type Mask = Grid<bool>;

pub fn count_set(mask: &Mask) -> usize {
    mask.as_slice().iter().filter(|&&m| m).count()
}

pub type Rgb = [f32; 3];

/// Three-channel image with every channel in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageRGB {
    pixels: Grid<Rgb>,
}

impl ImageRGB {
    pub fn new(pixels: Grid<Rgb>) -> Result<Self> {
        if let Some(bad) = pixels
            .as_slice()
            .iter()
            .find(|p| p.iter().any(|c| !(0.0..=1.0).contains(c)))
        {
            return Err(Error::invalid(format!("pixel {bad:?} outside [0, 1]")));
        }
        Ok(Self { pixels })
    }

    /// Builds an image, clamping every channel into `[0, 1]` (NaN maps to 0).
    pub fn from_clamped(mut pixels: Grid<Rgb>) -> Self {
        for p in pixels.as_mut_slice() {
            for c in p.iter_mut() {
                *c = if c.is_nan() { 0.0 } else { c.clamp(0.0, 1.0) };
            }
        }
        Self { pixels }
    }

    pub fn filled(width: usize, height: usize, color: Rgb) -> Self {
        Self::from_clamped(Grid::filled(width, height, color))
    }

    pub(crate) fn from_trusted(pixels: Grid<Rgb>) -> Self {
        debug_assert!(pixels
            .as_slice()
            .iter()
            .all(|p| p.iter().all(|c| (0.0..=1.0).contains(c))));
        Self { pixels }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.pixels.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.pixels.height()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Rgb {
        *self.pixels.get(x, y)
    }

    pub fn pixels(&self) -> &Grid<Rgb> {
        &self.pixels
    }

    pub fn into_pixels(self) -> Grid<Rgb> {
        self.pixels
    }

    /// Quantizes to 8 bits per channel, rounding to nearest.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels
            .as_slice()
            .iter()
            .flat_map(|p| p.map(quantize_channel))
            .collect()
    }

    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != width * height * 3 {
            return Err(Error::invalid(format!(
                "8-bit image of {width}x{height} needs {} bytes, got {}",
                width * height * 3,
                bytes.len()
            )));
        }
        let data = bytes
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]].map(|b| b as f32 / 255.0))
            .collect();
        Ok(Self {
            pixels: Grid::from_vec(width, height, data)?,
        })
    }
}

#[inline]
pub fn quantize_channel(c: f32) -> u8 {
    (c.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Depth map in meters with an explicit validity grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    values: Grid<f32>,
    valid: Mask,
}

impl DepthMap {
    pub fn new(values: Grid<f32>, valid: Mask) -> Result<Self> {
        values.check_shape(&valid)?;
        for (d, v) in values.as_slice().iter().zip(valid.as_slice()) {
            if *v && !(d.is_finite() && *d > 0.0) {
                return Err(Error::invalid(format!("valid depth {d} is not finite and positive")));
            }
        }
        Ok(Self { values, valid })
    }

    /// Interprets every finite positive value as valid.
    pub fn from_values(values: Grid<f32>) -> Self {
        let valid = values.map(|d| d.is_finite() && *d > 0.0);
        Self { values, valid }
    }

    pub fn invalid(width: usize, height: usize) -> Self {
        Self {
            values: Grid::filled(width, height, 0.0),
            valid: Grid::filled(width, height, false),
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.values.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.values.height()
    }

    /// Depth at a pixel, `None` when invalid.
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> Option<f32> {
        if *self.valid.get(x, y) {
            Some(*self.values.get(x, y))
        } else {
            None
        }
    }

    pub fn values(&self) -> &Grid<f32> {
        &self.values
    }

    pub fn validity(&self) -> &Mask {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        count_set(&self.valid)
    }

    pub(crate) fn from_trusted(values: Grid<f32>, valid: Mask) -> Self {
        Self { values, valid }
    }
}
