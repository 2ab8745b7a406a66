use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar channel a [`ScalarImage`] was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    /// Hematoxylin-emphasizing channel.
    #[serde(rename = "H")]
    H,
    /// Violet channel.
    #[serde(rename = "V")]
    V,
    #[serde(rename = "GRAY")]
    Gray,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::H => "H",
            Channel::V => "V",
            Channel::Gray => "GRAY",
        }
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "H" => Ok(Channel::H),
            "V" => Ok(Channel::V),
            "GRAY" | "GREY" => Ok(Channel::Gray),
            other => Err(Error::Config(format!("unknown channel '{other}'"))),
        }
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Dimensions {
            width,
            height,
            reason: "width and height must be positive".into(),
        });
    }
    if width * height != len {
        return Err(Error::Dimensions {
            width,
            height,
            reason: format!("expected {} pixels, got {len}", width * height),
        });
    }
    Ok(())
}

/// 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

/// A fixed-size RGB tile cut from a slide; the unit of classification.
pub type RgbPatch = RgbImage;

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        Self::new(width, height, vec![rgb; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [[u8; 3]] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn put(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        self.pixels[y * self.width + x] = rgb;
    }

    /// Copies out the `width`x`height` window whose top-left corner is `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, width: usize, height: usize) -> Result<Self> {
        if x + width > self.width || y + height > self.height {
            return Err(Error::Dimensions {
                width,
                height,
                reason: format!("crop at ({x}, {y}) exceeds source {}x{}", self.width, self.height),
            });
        }
        let mut pixels = Vec::with_capacity(width * height);
        for row in y..y + height {
            let start = row * self.width + x;
            pixels.extend_from_slice(&self.pixels[start..start + width]);
        }
        Self::new(width, height, pixels)
    }

    /// Rotates by `quarter_turns` x 90 degrees counter-clockwise (as displayed).
    pub fn rotate90(&self, quarter_turns: u32) -> Self {
        let (width, height, pixels) = rotate_quarter(self.width, self.height, &self.pixels, quarter_turns);
        Self { width, height, pixels }
    }
}

/// Per-pixel real-valued channel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
    channel: Channel,
}

impl ScalarImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>, channel: Channel) -> Result<Self> {
        check_dims(width, height, values.len())?;
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Dimensions {
                width,
                height,
                reason: format!("non-finite value {bad}"),
            });
        }
        Ok(Self {
            width,
            height,
            values,
            channel,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channel: Channel,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, values, channel)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// `(min, max)` over all pixels.
    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.values.iter().map(|&v| f(v)).collect(),
            self.channel,
        )
    }

    pub fn rotate90(&self, quarter_turns: u32) -> Self {
        let (width, height, values) = rotate_quarter(self.width, self.height, &self.values, quarter_turns);
        Self {
            width,
            height,
            values,
            channel: self.channel,
        }
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            width: self.width,
            height: self.height,
            values,
            channel: self.channel,
        }
    }

    /// Min-max scaled 8-bit rendering, for visualization only.
    pub fn to_u8(&self) -> Vec<u8> {
        let (lo, hi) = self.range();
        let span = hi - lo;
        self.values
            .iter()
            .map(|&v| {
                if span > 0.0 {
                    ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
                } else {
                    0
                }
            })
            .collect()
    }
}

/// Boolean raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height, bits.len())?;
        Ok(Self { width, height, bits })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self::new(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// True when every set bit of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub(crate) fn with_bits(&self, bits: Vec<bool>) -> Self {
        debug_assert_eq!(bits.len(), self.bits.len());
        Self {
            width: self.width,
            height: self.height,
            bits,
        }
    }
}

fn rotate_quarter<T: Copy>(width: usize, height: usize, data: &[T], quarter_turns: u32) -> (usize, usize, Vec<T>) {
    match quarter_turns % 4 {
        0 => (width, height, data.to_vec()),
        1 => {
            // counter-clockwise: new(x, y) = old(W-1-y, x), new dims H x W
            let mut out = Vec::with_capacity(data.len());
            for y in 0..width {
                for x in 0..height {
                    out.push(data[x * width + (width - 1 - y)]);
                }
            }
            (height, width, out)
        }
        2 => (width, height, data.iter().rev().copied().collect()),
        _ => {
            let mut out = Vec::with_capacity(data.len());
            for y in 0..width {
                for x in 0..height {
                    out.push(data[(height - 1 - x) * width + y]);
                }
            }
            (height, width, out)
        }
    }
}
