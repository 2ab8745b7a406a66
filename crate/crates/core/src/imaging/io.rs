//! PNG/TIFF raster I/O.

use std::path::Path;

use super::raster::{BinaryMask, RgbImage, ScalarImage};
use crate::error::{Error, Result};

fn image_err(path: &Path) -> impl FnOnce(image::ImageError) -> Error + '_ {
    move |source| Error::Image {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads any supported raster as 8-bit RGB (alpha dropped).
pub fn read_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let img = image::open(path).map_err(image_err(path))?.to_rgb8();
    let (w, h) = img.dimensions();
    let pixels = img.pixels().map(|p| p.0).collect();
    RgbImage::new(w as usize, h as usize, pixels)
}

pub fn write_rgb_png(path: impl AsRef<Path>, img: &RgbImage) -> Result<()> {
    let path = path.as_ref();
    let raw: Vec<u8> = img.pixels().iter().flatten().copied().collect();
    let buf = image::RgbImage::from_raw(img.width() as u32, img.height() as u32, raw)
        .expect("buffer length matches dimensions");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(image_err(path))
}

pub fn write_gray_png(path: impl AsRef<Path>, width: usize, height: usize, data: Vec<u8>) -> Result<()> {
    let path = path.as_ref();
    let buf = image::GrayImage::from_raw(width as u32, height as u32, data).ok_or_else(|| Error::Dimensions {
        width,
        height,
        reason: "gray buffer length does not match dimensions".into(),
    })?;
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(image_err(path))
}

/// Writes a min-max scaled 8-bit preview of a scalar channel.
pub fn write_scalar_png(path: impl AsRef<Path>, img: &ScalarImage) -> Result<()> {
    write_gray_png(path, img.width(), img.height(), img.to_u8())
}

/// Ground-truth convention: dark pixels (luma < 128) mark the region of interest.
pub fn read_roi_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let img = image::open(path).map_err(image_err(path))?.to_luma8();
    let (w, h) = img.dimensions();
    BinaryMask::new(w as usize, h as usize, img.pixels().map(|p| p.0[0] < 128).collect())
}

/// Inverse of [`read_roi_mask`]: ROI black, everything else white.
pub fn write_roi_mask(path: impl AsRef<Path>, mask: &BinaryMask) -> Result<()> {
    let data = mask.bits().iter().map(|&b| if b { 0 } else { 255 }).collect();
    write_gray_png(path, mask.width(), mask.height(), data)
}
