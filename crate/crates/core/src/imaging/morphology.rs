//! Flat grayscale and binary morphology.
//!
//! Footprints are clipped at the image border: a pixel's neighborhood only
//! contains in-bounds pixels. Erosion and dilation stay an adjoint pair under
//! that convention, so opening and closing remain idempotent.

use serde::{Deserialize, Serialize};

use super::raster::{BinaryMask, ScalarImage};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeShape {
    Disk,
    Square,
}

/// Symmetric structuring element centered on its origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuringElement {
    pub shape: SeShape,
    pub radius: usize,
}

impl StructuringElement {
    pub fn disk(radius: usize) -> Result<Self> {
        Self::new(SeShape::Disk, radius)
    }

    pub fn square(radius: usize) -> Result<Self> {
        Self::new(SeShape::Square, radius)
    }

    pub fn new(shape: SeShape, radius: usize) -> Result<Self> {
        if radius == 0 {
            return Err(Error::Config("structuring element radius must be >= 1".into()));
        }
        Ok(Self { shape, radius })
    }

    /// Footprint offsets `(dx, dy)`. A disk keeps `dx^2 + dy^2 <= r^2`.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        let r = self.radius as isize;
        let mut out = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                let inside = match self.shape {
                    SeShape::Square => true,
                    SeShape::Disk => dx * dx + dy * dy <= r * r,
                };
                if inside {
                    out.push((dx, dy));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MorphOp {
    Erode,
    Dilate,
    Open,
    Close,
}

/// Rasters that support flat morphology.
pub trait Morphology: Sized {
    fn erode(&self, se: &StructuringElement) -> Self;
    fn dilate(&self, se: &StructuringElement) -> Self;

    fn open(&self, se: &StructuringElement) -> Self {
        self.erode(se).dilate(se)
    }

    fn close(&self, se: &StructuringElement) -> Self {
        self.dilate(se).erode(se)
    }

    fn morph(&self, op: MorphOp, se: &StructuringElement) -> Self {
        match op {
            MorphOp::Erode => self.erode(se),
            MorphOp::Dilate => self.dilate(se),
            MorphOp::Open => self.open(se),
            MorphOp::Close => self.close(se),
        }
    }
}

/// Applies `combine` over the clipped footprint of every pixel.
fn neighborhood_filter<T: Copy>(
    data: &[T],
    width: usize,
    height: usize,
    se: &StructuringElement,
    combine: impl Fn(T, T) -> T,
) -> Vec<T> {
    let offsets = se.offsets();
    let r = se.radius;
    let mut out = Vec::with_capacity(data.len());
    for y in 0..height {
        let interior_y = y >= r && y + r < height;
        for x in 0..width {
            let mut acc = data[y * width + x];
            if interior_y && x >= r && x + r < width {
                for &(dx, dy) in &offsets {
                    let idx = (y as isize + dy) as usize * width + (x as isize + dx) as usize;
                    acc = combine(acc, data[idx]);
                }
            } else {
                for &(dx, dy) in &offsets {
                    let nx = x as isize + dx;
                    let ny = y as isize + dy;
                    if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                        continue;
                    }
                    acc = combine(acc, data[ny as usize * width + nx as usize]);
                }
            }
            out.push(acc);
        }
    }
    out
}

impl Morphology for ScalarImage {
    fn erode(&self, se: &StructuringElement) -> Self {
        let v = neighborhood_filter(self.values(), self.width(), self.height(), se, f64::min);
        self.with_values(v)
    }

    fn dilate(&self, se: &StructuringElement) -> Self {
        let v = neighborhood_filter(self.values(), self.width(), self.height(), se, f64::max);
        self.with_values(v)
    }
}

impl Morphology for BinaryMask {
    fn erode(&self, se: &StructuringElement) -> Self {
        let b = neighborhood_filter(self.bits(), self.width(), self.height(), se, |a, b| a && b);
        self.with_bits(b)
    }

    fn dilate(&self, se: &StructuringElement) -> Self {
        let b = neighborhood_filter(self.bits(), self.width(), self.height(), se, |a, b| a || b);
        self.with_bits(b)
    }
}
