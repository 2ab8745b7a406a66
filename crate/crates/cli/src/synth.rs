//! Procedural two-class histology-like textures and a composed test slide.
//!
//! Tumor-like patches carry dense, roughly aligned dark elliptical nuclei and
//! violet wavy strands on a pink stroma. Healthy-like patches carry sparse
//! round nuclei on a smooth, fibrous pink stroma. Background is one uniform
//! color. Every texture is drawn in a canonical frame and mapped into the
//! patch through a rotation about its center, so any angle is exact at the
//! geometry level.

use std::f64::consts::PI;

use drlbp_core::imaging::{BinaryMask, RgbImage};
use drlbp_core::learn::Label;
use drlbp_core::rng::Prng;
use drlbp_core::Result;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextureClass {
    Tumor,
    Healthy,
    Background,
}

impl TextureClass {
    pub fn label(self) -> Label {
        match self {
            TextureClass::Tumor => Label::Tumor,
            _ => Label::NotTumor,
        }
    }
}

pub const BACKGROUND_RGB: [u8; 3] = [243, 239, 241];
pub const NUCLEUS_RGB: [u8; 3] = [108, 44, 14];
const STRAND_RGB: [u8; 3] = [148, 74, 186];
/// Sensor noise, in 8-bit levels, added before quantization.
const NOISE_SIGMA: f64 = 0.15;

/// Mixes `seed` and `salt` into an independent 64-bit seed (splitmix64).
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Lattice value noise in `[0, 1]` with smoothstep blending.
struct ValueNoise {
    seed: u64,
    sx: f64,
    sy: f64,
}

impl ValueNoise {
    fn lattice(&self, ix: i64, iy: i64) -> f64 {
        let h = derive_seed(self.seed, (ix as u64).wrapping_mul(0x1000_0000_01B3) ^ (iy as u64));
        (h >> 11) as f64 / (1u64 << 53) as f64
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        let (u, v) = (x / self.sx, y / self.sy);
        let (fx, fy) = (u.floor(), v.floor());
        let (ix, iy) = (fx as i64, fy as i64);
        let s = |t: f64| t * t * (3.0 - 2.0 * t);
        let (tx, ty) = (s(u - fx), s(v - fy));
        let a = self.lattice(ix, iy) + tx * (self.lattice(ix + 1, iy) - self.lattice(ix, iy));
        let b = self.lattice(ix, iy + 1) + tx * (self.lattice(ix + 1, iy + 1) - self.lattice(ix, iy + 1));
        a + ty * (b - a)
    }
}

/// Canonical-to-patch rotation about the patch center.
#[derive(Clone, Copy)]
struct Frame {
    c: f64,
    cos: f64,
    sin: f64,
}

impl Frame {
    fn to_patch(self, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = (x - self.c, y - self.c);
        (
            self.c + self.cos * dx - self.sin * dy,
            self.c + self.sin * dx + self.cos * dy,
        )
    }

    fn to_canonical(self, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = (x - self.c, y - self.c);
        (
            self.c + self.cos * dx + self.sin * dy,
            self.c - self.sin * dx + self.cos * dy,
        )
    }
}

struct Canvas {
    size: usize,
    rgb: Vec<[f64; 3]>,
}

impl Canvas {
    fn paint_ellipse(&mut self, cx: f64, cy: f64, a: f64, b: f64, phi: f64, color: [f64; 3]) {
        let (s, c) = phi.sin_cos();
        let reach = a.max(b).ceil() as i64 + 1;
        let n = self.size as i64;
        let (x0, x1) = ((cx as i64 - reach).max(0), (cx as i64 + reach).min(n - 1));
        let (y0, y1) = ((cy as i64 - reach).max(0), (cy as i64 + reach).min(n - 1));
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                let u = (dx * c + dy * s) / a;
                let v = (-dx * s + dy * c) / b;
                if u * u + v * v <= 1.0 {
                    self.rgb[y as usize * self.size + x as usize] = color;
                }
            }
        }
    }
}

struct Style {
    base: [f64; 3],
    stroma_scale: (f64, f64),
    stroma_depth: [f64; 3],
    coverage: f64,
    major: (f64, f64),
    minor: (f64, f64),
    /// Orientation spread of nuclei around the canonical x axis; `None` for
    /// uniform orientations.
    spread: Option<f64>,
    strands: usize,
}

fn style(class: TextureClass) -> Style {
    match class {
        TextureClass::Tumor => Style {
            base: [226.0, 150.0, 196.0],
            stroma_scale: (28.0, 28.0),
            stroma_depth: [14.0, 22.0, 12.0],
            coverage: 0.22,
            major: (7.0, 12.0),
            minor: (3.5, 6.0),
            spread: Some(0.3),
            strands: 10,
        },
        TextureClass::Healthy | TextureClass::Background => Style {
            base: [238.0, 182.0, 212.0],
            stroma_scale: (90.0, 10.0),
            stroma_depth: [18.0, 30.0, 16.0],
            coverage: 0.09,
            major: (4.5, 7.0),
            minor: (4.0, 6.0),
            spread: None,
            strands: 0,
        },
    }
}

/// Renders one `size x size` patch of `class`, rotated by `angle` radians
/// (counter-clockwise on screen).
pub fn render_patch(class: TextureClass, size: usize, seed: u64, angle: f64) -> RgbImage {
    if class == TextureClass::Background {
        return RgbImage::filled(size, size, BACKGROUND_RGB).expect("positive size");
    }
    let st = style(class);
    let mut rng = Prng::new(seed);
    let c = (size as f64 - 1.0) / 2.0;
    // screen y points down, so a visual counter-clockwise turn is -angle here
    let (sin, cos) = (-angle).sin_cos();
    let frame = Frame { c, cos, sin };
    let jitter: Vec<f64> = (0..3).map(|_| rng.range(-6.0, 6.0)).collect();
    let base: Vec<f64> = st.base.iter().zip(&jitter).map(|(b, j)| b + j).collect();

    let noise = ValueNoise {
        seed: rng.next_u64(),
        sx: st.stroma_scale.0,
        sy: st.stroma_scale.1,
    };
    let mut canvas = Canvas {
        size,
        rgb: Vec::with_capacity(size * size),
    };
    for y in 0..size {
        for x in 0..size {
            let (u, v) = frame.to_canonical(x as f64, y as f64);
            let s = noise.at(u, v);
            canvas.rgb.push([0, 1, 2].map(|k| base[k] - st.stroma_depth[k] * s));
        }
    }

    // canonical region that covers the patch at any rotation
    let half = c * std::f64::consts::SQRT_2 + 16.0;
    let area = (2.0 * half) * (2.0 * half);

    for _ in 0..st.strands * (area / (size * size) as f64).ceil() as usize {
        let (sx, sy) = (c + rng.range(-half, half), c + rng.range(-half, half));
        let dir = rng.normal() * 0.2;
        let length = rng.range(150.0, 320.0);
        let amp = rng.range(5.0, 14.0);
        let wave = rng.range(40.0, 80.0);
        let phase = rng.range(0.0, 2.0 * PI);
        let radius = rng.range(1.5, 2.6);
        let color = STRAND_RGB.map(|v| f64::from(v) + rng.range(-8.0, 8.0));
        let (ds, dc) = dir.sin_cos();
        let mut t = 0.0;
        while t < length {
            let off = amp * (2.0 * PI * t / wave + phase).sin();
            let (u, v) = (sx + t * dc - off * ds, sy + t * ds + off * dc);
            let (px, py) = frame.to_patch(u, v);
            canvas.paint_ellipse(px, py, radius, radius, 0.0, color);
            t += 0.75;
        }
    }

    let mean_area = PI * (st.major.0 + st.major.1) / 2.0 * (st.minor.0 + st.minor.1) / 2.0;
    let count = (st.coverage * area / mean_area).round() as usize;
    for _ in 0..count {
        let (u, v) = (c + rng.range(-half, half), c + rng.range(-half, half));
        let a = rng.range(st.major.0, st.major.1);
        let b = rng.range(st.minor.0, st.minor.1).min(a);
        let phi = match st.spread {
            Some(s) => rng.normal() * s,
            None => rng.range(0.0, PI),
        };
        let shade = rng.range(0.88, 1.12);
        let color = NUCLEUS_RGB.map(|v| f64::from(v) * shade);
        let (px, py) = frame.to_patch(u, v);
        // the ellipse axis turns with the frame
        let phi_patch = phi + (-angle);
        canvas.paint_ellipse(px, py, a, b, phi_patch, color);
    }

    let pixels = canvas
        .rgb
        .iter()
        .map(|p| p.map(|v| (v + NOISE_SIGMA * rng.normal()).round().clamp(0.0, 255.0) as u8))
        .collect();
    RgbImage::new(size, size, pixels).expect("canvas matches size")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// Recipe for one generated patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchRecipe {
    pub id: String,
    pub class: TextureClass,
    pub seed: u64,
    pub angle: f64,
    pub split: Split,
    pub slide_id: String,
}

impl PatchRecipe {
    pub fn render(&self, size: usize) -> RgbImage {
        render_patch(self.class, size, self.seed, self.angle)
    }
}

/// Patches grouped into virtual slides of this many patches.
pub const PATCHES_PER_SLIDE: usize = 50;

/// Balanced train and test recipes. Training patches are upright; test
/// patches get a uniformly random rotation in `[0, 2 pi)`.
pub fn dataset_recipes(seed: u64, n_train: usize, n_test: usize) -> Vec<PatchRecipe> {
    let mut out = Vec::with_capacity(n_train + n_test);
    for (split, n, tag) in [(Split::Train, n_train, 1u64), (Split::Test, n_test, 2u64)] {
        let mut rng = Prng::new(derive_seed(seed, tag));
        for i in 0..n {
            let class = if i % 2 == 0 {
                TextureClass::Tumor
            } else {
                TextureClass::Healthy
            };
            let angle = match split {
                Split::Train => 0.0,
                Split::Test => rng.range(0.0, 2.0 * PI),
            };
            out.push(PatchRecipe {
                id: format!("{}_{i:05}", split.as_str()),
                class,
                seed: derive_seed(seed, (tag << 32) | i as u64),
                angle,
                split,
                slide_id: format!("{}-slide{:03}", split.as_str(), i / PATCHES_PER_SLIDE),
            });
        }
    }
    out
}

/// Tile classes of the composed slide, row-major over a 4 x 6 grid. The
/// tumor block spans columns 1-3 of rows 0-1.
pub const SLIDE_LAYOUT: [[TextureClass; 6]; 4] = {
    use TextureClass::{Background as B, Healthy as H, Tumor as T};
    [
        [H, T, T, T, H, H],
        [H, T, T, T, H, B],
        [H, H, H, H, H, B],
        [B, B, B, B, B, B],
    ]
};

#[derive(Debug, Clone)]
pub struct SyntheticSlide {
    pub image: RgbImage,
    /// Slide-resolution ground truth, true on the tumor block.
    pub roi: BinaryMask,
    pub tile_size: usize,
    pub classes: Vec<Vec<TextureClass>>,
}

/// Composes [`SLIDE_LAYOUT`] from independently seeded, randomly rotated
/// tiles.
pub fn compose_slide(seed: u64, tile_size: usize) -> Result<SyntheticSlide> {
    let rows = SLIDE_LAYOUT.len();
    let cols = SLIDE_LAYOUT[0].len();
    let mut image = RgbImage::filled(cols * tile_size, rows * tile_size, BACKGROUND_RGB)?;
    let mut rng = Prng::new(derive_seed(seed, 3));
    for (r, row) in SLIDE_LAYOUT.iter().enumerate() {
        for (c, &class) in row.iter().enumerate() {
            let angle = rng.range(0.0, 2.0 * PI);
            let tile_seed = derive_seed(seed, (3 << 32) | (r * cols + c) as u64);
            let tile = render_patch(class, tile_size, tile_seed, angle);
            for y in 0..tile_size {
                for x in 0..tile_size {
                    image.put(c * tile_size + x, r * tile_size + y, tile.get(x, y));
                }
            }
        }
    }
    let roi = BinaryMask::from_fn(image.width(), image.height(), |x, y| {
        SLIDE_LAYOUT[y / tile_size][x / tile_size] == TextureClass::Tumor
    })?;
    Ok(SyntheticSlide {
        image,
        roi,
        tile_size,
        classes: SLIDE_LAYOUT.iter().map(|r| r.to_vec()).collect(),
    })
}
