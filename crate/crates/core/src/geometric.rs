//! Affine warps, flips and random resized crops (scenarios D, E, F).

use serde::{Deserialize, Serialize};

use crate::imgcore::{resize_to, Edge};
use crate::{Error, ImageBuffer, Result, RngStream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineParams {
    /// Degrees, counter-clockwise on screen.
    pub rotation: f64,
    /// Degrees of x-shear.
    pub shear: f64,
    /// Multiplier on image area; linear dimensions scale by its square root.
    pub area_scale: f64,
}

impl AffineParams {
    pub const IDENTITY: AffineParams = AffineParams {
        rotation: 0.0,
        shear: 0.0,
        area_scale: 1.0,
    };

    /// Forward 2x2 linear part: scale * shear * rotation, acting on
    /// offsets from the image center (y pointing down).
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.rotation.to_radians().sin_cos();
        // Screen-space CCW rotation with y down.
        let rot = [[c, s], [-s, c]];
        let k = self.shear.to_radians().tan();
        let shear = [[1.0, k], [0.0, 1.0]];
        let z = self.area_scale.sqrt();
        let m = mul(shear, rot);
        [[z * m[0][0], z * m[0][1]], [z * m[1][0], z * m[1][1]]]
    }
}

fn mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AffineRanges {
    pub max_rotation: f64,
    pub max_shear: f64,
    pub area_scale: (f64, f64),
}

impl Default for AffineRanges {
    fn default() -> Self {
        Self {
            max_rotation: 90.0,
            max_shear: 20.0,
            area_scale: (0.8, 1.2),
        }
    }
}

impl AffineRanges {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=180.0).contains(&self.max_rotation) {
            return Err(Error::Config(format!(
                "affine.max_rotation must lie in [0, 180], got {}",
                self.max_rotation
            )));
        }
        if !(0.0..80.0).contains(&self.max_shear) {
            return Err(Error::Config(format!(
                "affine.max_shear must lie in [0, 80), got {}",
                self.max_shear
            )));
        }
        let (lo, hi) = self.area_scale;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Config(format!(
                "affine.area_scale must satisfy 0 < lo <= hi, got ({lo}, {hi})"
            )));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut RngStream) -> AffineParams {
        AffineParams {
            rotation: rng.uniform(-self.max_rotation, self.max_rotation),
            shear: rng.uniform(-self.max_shear, self.max_shear),
            area_scale: rng.uniform(self.area_scale.0, self.area_scale.1),
        }
    }
}

/// Rotation in `[-90, 90]`, shear in `[-20, 20]`, area scale in `[0.8, 1.2]`.
pub fn sample_affine(rng: &mut RngStream) -> AffineParams {
    AffineRanges::default().sample(rng)
}

/// Warps about the image center; output keeps the input size and pixels
/// mapped from outside the source are filled by symmetric reflection.
pub fn apply_affine(img: &ImageBuffer, params: &AffineParams) -> Result<ImageBuffer> {
    let m = params.matrix();
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !det.is_finite() || det.abs() < 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "affine transform is singular: {params:?}"
        )));
    }
    let inv = [
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ];
    let cx = (img.width() as f64 - 1.0) / 2.0;
    let cy = (img.height() as f64 - 1.0) / 2.0;
    Ok(img.remap(img.width(), img.height(), Edge::Symmetric, move |x, y| {
        let dx = x - cx;
        let dy = y - cy;
        (
            cx + inv[0][0] * dx + inv[0][1] * dy,
            cy + inv[1][0] * dx + inv[1][1] * dy,
        )
    }))
}

pub fn flip_horizontal(img: &ImageBuffer) -> ImageBuffer {
    let w = img.width();
    ImageBuffer::from_fn(w, img.height(), |x, y| img.pixel(w - 1 - x, y))
}

pub fn flip_vertical(img: &ImageBuffer) -> ImageBuffer {
    let h = img.height();
    ImageBuffer::from_fn(img.width(), h, |x, y| img.pixel(x, h - 1 - y))
}

/// Independent horizontal and vertical flips, each with probability 0.5.
pub fn random_flip(img: &ImageBuffer, rng: &mut RngStream) -> ImageBuffer {
    let h = rng.chance(0.5);
    let v = rng.chance(0.5);
    match (h, v) {
        (false, false) => img.clone(),
        (true, false) => flip_horizontal(img),
        (false, true) => flip_vertical(img),
        (true, true) => flip_vertical(&flip_horizontal(img)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CropWindow {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl CropWindow {
    pub fn full(img_w: u32, img_h: u32) -> Self {
        Self {
            x: 0,
            y: 0,
            w: img_w,
            h: img_h,
        }
    }

    pub fn fits(&self, img_w: u32, img_h: u32) -> bool {
        self.w >= 1
            && self.h >= 1
            && self.x as u64 + self.w as u64 <= img_w as u64
            && self.y as u64 + self.h as u64 <= img_h as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CropRanges {
    /// Window area as a fraction of the image area.
    pub area: (f64, f64),
    /// Window aspect relative to the image aspect.
    pub aspect: (f64, f64),
    pub attempts: u32,
}

impl Default for CropRanges {
    fn default() -> Self {
        Self {
            area: (0.4, 1.0),
            aspect: (3.0 / 4.0, 4.0 / 3.0),
            attempts: 10,
        }
    }
}

impl CropRanges {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.area;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(Error::Config(format!(
                "crop.area must satisfy 0 < lo <= hi <= 1, got ({lo}, {hi})"
            )));
        }
        let (lo, hi) = self.aspect;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Config(format!(
                "crop.aspect must satisfy 0 < lo <= hi, got ({lo}, {hi})"
            )));
        }
        Ok(())
    }

    /// Returns the window and whether it came from the centered fallback.
    pub fn sample_window(&self, img_w: u32, img_h: u32, rng: &mut RngStream) -> (CropWindow, bool) {
        let area = img_w as f64 * img_h as f64;
        let base_aspect = img_w as f64 / img_h as f64;
        for _ in 0..self.attempts {
            let target = area * rng.uniform(self.area.0, self.area.1);
            let rel = rng.log_uniform(self.aspect.0, self.aspect.1);
            let aspect = rel * base_aspect;
            let w = (target * aspect).sqrt().round();
            let h = (target / aspect).sqrt().round();
            if w < 1.0 || h < 1.0 || w > img_w as f64 || h > img_h as f64 {
                continue;
            }
            // Rounding can push a window just past the bounds; reject it.
            let frac = w * h / area;
            let got_rel = (w / h) / base_aspect;
            if frac < self.area.0 || frac > self.area.1 {
                continue;
            }
            if got_rel < self.aspect.0 || got_rel > self.aspect.1 {
                continue;
            }
            let (w, h) = (w as u32, h as u32);
            let x = rng.up_to(img_w - w);
            let y = rng.up_to(img_h - h);
            return (CropWindow { x, y, w, h }, false);
        }
        (fallback_window(img_w, img_h, self.area.1), true)
    }
}

/// Largest centered window at the original aspect whose area fraction does
/// not exceed `max_area`.
fn fallback_window(img_w: u32, img_h: u32, max_area: f64) -> CropWindow {
    let s = max_area.clamp(0.0, 1.0).sqrt();
    let w = ((img_w as f64 * s).round() as u32).clamp(1, img_w);
    let h = ((img_h as f64 * s).round() as u32).clamp(1, img_h);
    CropWindow {
        x: (img_w - w) / 2,
        y: (img_h - h) / 2,
        w,
        h,
    }
}

pub fn sample_crop(img_w: u32, img_h: u32, rng: &mut RngStream) -> CropWindow {
    CropRanges::default().sample_window(img_w, img_h, rng).0
}

pub fn crop(img: &ImageBuffer, window: &CropWindow) -> Result<ImageBuffer> {
    if !window.fits(img.width(), img.height()) {
        return Err(Error::InvalidParameter(format!(
            "crop window {window:?} exceeds {}x{} image",
            img.width(),
            img.height()
        )));
    }
    Ok(ImageBuffer::from_fn(window.w, window.h, |x, y| {
        img.pixel(window.x + x, window.y + y)
    }))
}

pub fn crop_and_resize(
    img: &ImageBuffer,
    window: &CropWindow,
    out_w: u32,
    out_h: u32,
) -> Result<ImageBuffer> {
    resize_to(&crop(img, window)?, out_w, out_h)
}
