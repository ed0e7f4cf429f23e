//! Saturation, contrast, brightness and hue adjustments (scenarios B, C).
//!
//! Each adjustment is a blend: brightness toward black, contrast toward
//! the mean luma, saturation toward the per-pixel luma. Hue is a rotation
//! in HSV. Every adjustment rounds half-to-even and clamps once at the end.

use serde::{Deserialize, Serialize};

use crate::imgcore::to_u8;
use crate::{Error, ImageBuffer, Result, RngStream};

#[inline]
fn luma(p: [u8; 3]) -> f64 {
    0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
}

fn check_factor(factor: f64) -> Result<()> {
    if factor > 0.0 && factor.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "factor must be positive, got {factor}"
        )))
    }
}

pub fn adjust_brightness(img: &ImageBuffer, factor: f64) -> Result<ImageBuffer> {
    check_factor(factor)?;
    Ok(img.map_pixels(|p| p.map(|v| to_u8(v as f64 * factor))))
}

pub fn adjust_contrast(img: &ImageBuffer, factor: f64) -> Result<ImageBuffer> {
    check_factor(factor)?;
    let n = img.width() as f64 * img.height() as f64;
    let mean = img.pixels().map(luma).sum::<f64>() / n;
    Ok(img.map_pixels(|p| p.map(|v| to_u8(mean + factor * (v as f64 - mean)))))
}

/// `factor == 0` is accepted here and yields the luma image.
pub fn adjust_saturation(img: &ImageBuffer, factor: f64) -> Result<ImageBuffer> {
    if !(factor >= 0.0 && factor.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "saturation factor must be non-negative, got {factor}"
        )));
    }
    Ok(img.map_pixels(|p| {
        let g = luma(p);
        p.map(|v| to_u8(g + factor * (v as f64 - g)))
    }))
}

/// Rotates hue by `delta` turns, `delta` in `[-0.5, 0.5]`.
pub fn shift_hue(img: &ImageBuffer, delta: f64) -> Result<ImageBuffer> {
    if !(-0.5..=0.5).contains(&delta) {
        return Err(Error::InvalidParameter(format!(
            "hue delta must lie in [-0.5, 0.5], got {delta}"
        )));
    }
    if delta == 0.0 {
        return Ok(img.clone());
    }
    Ok(img.map_pixels(|p| {
        let (h, s, v) = rgb_to_hsv(p.map(|c| c as f64 / 255.0));
        if s == 0.0 {
            return p;
        }
        let rgb = hsv_to_rgb(((h + delta).rem_euclid(1.0), s, v));
        rgb.map(|c| to_u8(c * 255.0))
    }))
}

fn rgb_to_hsv([r, g, b]: [f64; 3]) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let d = max - min;
    let s = if max > 0.0 { d / max } else { 0.0 };
    if d == 0.0 {
        return (0.0, s, max);
    }
    let h = if max == r {
        ((g - b) / d).rem_euclid(6.0)
    } else if max == g {
        (b - r) / d + 2.0
    } else {
        (r - g) / d + 4.0
    };
    (h / 6.0, s, max)
}

fn hsv_to_rgb((h, s, v): (f64, f64, f64)) -> [f64; 3] {
    let h6 = (h * 6.0).rem_euclid(6.0);
    let sector = h6.floor();
    let f = h6 - sector;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector as u8 {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

/// Sampling ranges for a color jitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColorJitterRanges {
    pub saturation: (f64, f64),
    pub contrast: (f64, f64),
    pub brightness: (f64, f64),
    /// Hue shift is drawn from `[-max_hue, max_hue]`.
    pub max_hue: f64,
}

impl Default for ColorJitterRanges {
    fn default() -> Self {
        Self {
            saturation: (0.7, 1.3),
            contrast: (0.7, 1.3),
            brightness: (0.7, 1.3),
            max_hue: 0.1,
        }
    }
}

impl ColorJitterRanges {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("saturation", self.saturation),
            ("contrast", self.contrast),
            ("brightness", self.brightness),
        ] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::Config(format!(
                    "color.{name} must satisfy 0 < lo <= hi, got ({lo}, {hi})"
                )));
            }
        }
        if !(0.0..=0.5).contains(&self.max_hue) {
            return Err(Error::Config(format!(
                "color.max_hue must lie in [0, 0.5], got {}",
                self.max_hue
            )));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut RngStream, with_hue: bool) -> ColorJitterParams {
        let saturation_factor = rng.uniform(self.saturation.0, self.saturation.1);
        let contrast_factor = rng.uniform(self.contrast.0, self.contrast.1);
        let brightness_factor = rng.uniform(self.brightness.0, self.brightness.1);
        let hue_delta = if with_hue {
            rng.uniform(-self.max_hue, self.max_hue)
        } else {
            0.0
        };
        ColorJitterParams {
            saturation_factor,
            contrast_factor,
            brightness_factor,
            hue_delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorJitterParams {
    pub saturation_factor: f64,
    pub contrast_factor: f64,
    pub brightness_factor: f64,
    pub hue_delta: f64,
}

impl ColorJitterParams {
    pub const IDENTITY: ColorJitterParams = ColorJitterParams {
        saturation_factor: 1.0,
        contrast_factor: 1.0,
        brightness_factor: 1.0,
        hue_delta: 0.0,
    };

    /// Applies saturation, contrast, brightness, then hue.
    pub fn apply(&self, img: &ImageBuffer) -> Result<ImageBuffer> {
        let out = adjust_saturation(img, self.saturation_factor)?;
        let out = adjust_contrast(&out, self.contrast_factor)?;
        let out = adjust_brightness(&out, self.brightness_factor)?;
        shift_hue(&out, self.hue_delta)
    }
}

/// Factors from `U[0.7, 1.3]`; hue shift from `U[-0.1, 0.1]` when
/// `with_hue`, else exactly zero.
pub fn sample_color_jitter(rng: &mut RngStream, with_hue: bool) -> ColorJitterParams {
    ColorJitterRanges::default().sample(rng, with_hue)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derive_stream;
    use proptest::prelude::*;

    fn varied() -> ImageBuffer {
        ImageBuffer::from_fn(16, 9, |x, y| {
            [(x * 16) as u8, (y * 28) as u8, ((x * y * 3) % 256) as u8]
        })
    }

    #[test]
    fn identities_are_exact() {
        let img = varied();
        assert_eq!(adjust_brightness(&img, 1.0).unwrap(), img);
        assert_eq!(adjust_contrast(&img, 1.0).unwrap(), img);
        assert_eq!(adjust_saturation(&img, 1.0).unwrap(), img);
        assert_eq!(shift_hue(&img, 0.0).unwrap(), img);
        assert_eq!(ColorJitterParams::IDENTITY.apply(&img).unwrap(), img);
    }

    #[test]
    fn brightness_examples() {
        let img = ImageBuffer::from_fn(2, 1, |x, _| if x == 0 { [100; 3] } else { [200; 3] });
        let out = adjust_brightness(&img, 1.3).unwrap();
        assert_eq!(out.pixel(0, 0), [130; 3]);
        assert_eq!(out.pixel(1, 0), [255; 3]);
        assert!(adjust_brightness(&img, 0.0).is_err());
        assert!(adjust_brightness(&img, -1.0).is_err());
    }

    #[test]
    fn contrast_examples() {
        let gray = ImageBuffer::filled(5, 5, [77; 3]);
        assert_eq!(adjust_contrast(&gray, 0.7).unwrap(), gray);
        assert_eq!(adjust_contrast(&gray, 1.3).unwrap(), gray);

        // Gray pixels 0 and 200: mean luma = 100.
        // 100 + 0.7 * (0 - 100) = 30; 100 + 0.7 * (200 - 100) = 170.
        let img = ImageBuffer::from_fn(2, 1, |x, _| if x == 0 { [0; 3] } else { [200; 3] });
        let out = adjust_contrast(&img, 0.7).unwrap();
        assert_eq!(out.pixel(0, 0), [30; 3]);
        assert_eq!(out.pixel(1, 0), [170; 3]);
        assert!(adjust_contrast(&img, 0.0).is_err());
    }

    #[test]
    fn saturation_examples() {
        let img = varied();
        let gray = adjust_saturation(&img, 0.0).unwrap();
        for (p, q) in img.pixels().zip(gray.pixels()) {
            let l = to_u8(luma(p));
            assert_eq!(q, [l, l, l]);
        }
        // Pure red: luma 76.245. R: 76.245 + 1.3 * 178.755 = 308.6 -> 255.
        // G, B: 76.245 - 1.3 * 76.245 = -22.9 -> 0.
        let red = ImageBuffer::filled(1, 1, [255, 0, 0]);
        assert_eq!(adjust_saturation(&red, 1.3).unwrap().pixel(0, 0), [255, 0, 0]);
        // Factor 0.7: R = 76.245 + 0.7 * 178.755 = 201.37 -> 201, G = B = 22.87 -> 23.
        assert_eq!(adjust_saturation(&red, 0.7).unwrap().pixel(0, 0), [201, 23, 23]);
        assert!(adjust_saturation(&red, -0.1).is_err());
    }

    #[test]
    fn hue_examples() {
        let red = ImageBuffer::filled(2, 2, [255, 0, 0]);
        let green = shift_hue(&red, 1.0 / 3.0).unwrap();
        assert_eq!(green.pixel(0, 0), [0, 255, 0]);
        let blue = shift_hue(&red, -1.0 / 3.0).unwrap();
        assert_eq!(blue.pixel(1, 1), [0, 0, 255]);

        let gray = ImageBuffer::filled(3, 3, [90; 3]);
        assert_eq!(shift_hue(&gray, 0.27).unwrap(), gray);

        assert!(shift_hue(&red, 0.6).is_err());
        assert!(shift_hue(&red, -0.51).is_err());
    }

    #[test]
    fn hsv_round_trip_within_one_level() {
        let img = varied();
        let there = shift_hue(&img, 0.25).unwrap();
        let back = shift_hue(&there, -0.25).unwrap();
        for (a, b) in img.pixels().zip(back.pixels()) {
            for c in 0..3 {
                assert!((a[c] as i32 - b[c] as i32).abs() <= 2, "{a:?} vs {b:?}");
            }
        }
        for rgb in [[10u8, 200, 33], [255, 128, 0], [1, 2, 3], [250, 250, 5]] {
            let (h, s, v) = rgb_to_hsv(rgb.map(|c| c as f64 / 255.0));
            let back = hsv_to_rgb((h, s, v)).map(|c| to_u8(c * 255.0));
            assert_eq!(back, rgb);
        }
    }

    #[test]
    fn jitter_sampling() {
        let mut sums = [0.0; 3];
        for i in 0..10_000u64 {
            let mut rng = derive_stream(5, "jitter", i, 0);
            let p = sample_color_jitter(&mut rng, true);
            for (k, f) in [p.saturation_factor, p.contrast_factor, p.brightness_factor]
                .into_iter()
                .enumerate()
            {
                assert!((0.7..=1.3).contains(&f));
                sums[k] += f;
            }
            assert!((-0.1..=0.1).contains(&p.hue_delta));
        }
        for s in sums {
            assert!((s / 10_000.0 - 1.0).abs() < 0.01);
        }
        let mut rng = derive_stream(5, "jitter", 0, 0);
        assert_eq!(sample_color_jitter(&mut rng, false).hue_delta, 0.0);

        let a = sample_color_jitter(&mut derive_stream(9, "x", 0, 0), true);
        let b = sample_color_jitter(&mut derive_stream(9, "x", 0, 0), true);
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn gray_pixels_are_fixed_points_of_saturation(v in 0u8..=255, f in 0.0f64..3.0) {
            let img = ImageBuffer::filled(1, 1, [v; 3]);
            prop_assert_eq!(adjust_saturation(&img, f).unwrap(), img);
        }

        #[test]
        fn hue_shift_preserves_value_channel(r in 0u8..=255, g in 0u8..=255, b in 0u8..=255, d in -0.5f64..0.5) {
            let img = ImageBuffer::filled(1, 1, [r, g, b]);
            let out = shift_hue(&img, d).unwrap().pixel(0, 0);
            let vmax = |p: [u8; 3]| p[0].max(p[1]).max(p[2]) as i32;
            prop_assert!((vmax(out) - vmax([r, g, b])).abs() <= 1);
        }
    }
}
