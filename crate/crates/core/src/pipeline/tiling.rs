use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::RgbImage;

pub const DEFAULT_TILE_SIZE: usize = 600;

/// Grid of full `tile_size` squares anchored at the slide origin. Right and
/// bottom remainders narrower than a tile are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlideTiling {
    pub slide_width: usize,
    pub slide_height: usize,
    pub tile_size: usize,
    pub rows: usize,
    pub cols: usize,
}

impl SlideTiling {
    pub fn new(slide_width: usize, slide_height: usize, tile_size: usize) -> Result<Self> {
        if tile_size == 0 {
            return Err(Error::Config("tile size must be positive".into()));
        }
        if slide_width < tile_size || slide_height < tile_size {
            return Err(Error::Dimensions {
                width: slide_width,
                height: slide_height,
                reason: format!("slide is smaller than one {tile_size}x{tile_size} tile"),
            });
        }
        Ok(Self {
            slide_width,
            slide_height,
            tile_size,
            rows: slide_height / tile_size,
            cols: slide_width / tile_size,
        })
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Top-left pixel `(x, y)` of tile `(row, col)`.
    pub fn origin(&self, row: usize, col: usize) -> (usize, usize) {
        (col * self.tile_size, row * self.tile_size)
    }

    /// `(row, col)` pairs in row-major order.
    pub fn coords(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| (r, c)))
    }

    pub fn crop(&self, slide: &RgbImage, row: usize, col: usize) -> Result<RgbImage> {
        let (x, y) = self.origin(row, col);
        slide.crop(x, y, self.tile_size, self.tile_size)
    }
}

pub fn tile_slide(slide: &RgbImage, tile_size: usize) -> Result<SlideTiling> {
    SlideTiling::new(slide.width(), slide.height(), tile_size)
}
