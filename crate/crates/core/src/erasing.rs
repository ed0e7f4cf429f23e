//! Random Erasing (scenario G): overwrite a random rectangle with uniform
//! noise.

use rand::RngCore as _;
use serde::{Deserialize, Serialize};

use crate::geometric::CropWindow;
use crate::{Error, ImageBuffer, Result, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErasingParams {
    pub apply_probability: f64,
    /// Rectangle area as a fraction of the image area.
    pub area_fraction_range: (f64, f64),
    /// Rectangle height / width, sampled log-uniformly.
    pub aspect_range: (f64, f64),
    pub attempts: u32,
}

impl Default for ErasingParams {
    fn default() -> Self {
        Self {
            apply_probability: 0.5,
            area_fraction_range: (0.02, 0.30),
            aspect_range: (0.3, 3.3),
            attempts: 100,
        }
    }
}

impl ErasingParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.apply_probability) {
            return Err(Error::Config(format!(
                "erasing.apply_probability must lie in [0, 1], got {}",
                self.apply_probability
            )));
        }
        let (lo, hi) = self.area_fraction_range;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(Error::Config(format!(
                "erasing.area_fraction_range must satisfy 0 < lo <= hi <= 1, got ({lo}, {hi})"
            )));
        }
        let (lo, hi) = self.aspect_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Config(format!(
                "erasing.aspect_range must satisfy 0 < lo <= hi, got ({lo}, {hi})"
            )));
        }
        Ok(())
    }
}

/// Picks the rectangle to erase, or `None` when the draw says skip or no
/// placement fits within `attempts`.
pub fn sample_erase_window(
    img_w: u32,
    img_h: u32,
    rng: &mut RngStream,
    params: &ErasingParams,
) -> Option<CropWindow> {
    if !rng.chance(params.apply_probability) {
        return None;
    }
    let area = img_w as f64 * img_h as f64;
    let (lo, hi) = params.area_fraction_range;
    for _ in 0..params.attempts {
        let target = area * rng.uniform(lo, hi);
        let aspect = rng.log_uniform(params.aspect_range.0, params.aspect_range.1);
        let h = (target * aspect).sqrt().round();
        let w = (target / aspect).sqrt().round();
        if w < 1.0 || h < 1.0 || w > img_w as f64 || h > img_h as f64 {
            continue;
        }
        let frac = w * h / area;
        if frac < lo || frac > hi {
            continue;
        }
        let (w, h) = (w as u32, h as u32);
        let x = rng.up_to(img_w - w);
        let y = rng.up_to(img_h - h);
        return Some(CropWindow { x, y, w, h });
    }
    None
}

/// Returns the (possibly) erased image and the rectangle that was filled.
pub fn random_erasing_with_window(
    img: &ImageBuffer,
    rng: &mut RngStream,
    params: &ErasingParams,
) -> (ImageBuffer, Option<CropWindow>) {
    let Some(win) = sample_erase_window(img.width(), img.height(), rng, params) else {
        return (img.clone(), None);
    };
    let mut out = img.clone();
    let stride = img.width() as usize * 3;
    let data = out.data_mut();
    for y in win.y..win.y + win.h {
        let start = y as usize * stride + win.x as usize * 3;
        rng.fill_bytes(&mut data[start..start + win.w as usize * 3]);
    }
    (out, Some(win))
}

pub fn random_erasing(img: &ImageBuffer, rng: &mut RngStream, params: &ErasingParams) -> ImageBuffer {
    random_erasing_with_window(img, rng, params).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derive_stream;

    fn img() -> ImageBuffer {
        ImageBuffer::from_fn(64, 48, |x, y| [x as u8, y as u8, 200])
    }

    #[test]
    fn disabled_leaves_image() {
        let params = ErasingParams {
            apply_probability: 0.0,
            ..Default::default()
        };
        let src = img();
        for i in 0..200 {
            assert_eq!(random_erasing(&src, &mut derive_stream(0, "e", i, 0), &params), src);
        }
    }

    #[test]
    fn area_bound_and_locality() {
        let params = ErasingParams {
            apply_probability: 1.0,
            ..Default::default()
        };
        let src = img();
        let area = 64.0 * 48.0;
        let mut applied = 0;
        for i in 0..10_000 {
            let (out, win) = random_erasing_with_window(&src, &mut derive_stream(1, "e", i, 0), &params);
            let Some(win) = win else { continue };
            applied += 1;
            assert!(win.fits(64, 48));
            assert!((win.w * win.h) as f64 <= 0.30 * area);
            for y in 0..48 {
                for x in 0..64 {
                    let inside = x >= win.x && x < win.x + win.w && y >= win.y && y < win.y + win.h;
                    if !inside {
                        assert_eq!(out.pixel(x, y), src.pixel(x, y));
                    }
                }
            }
        }
        assert!(applied > 9_900, "{applied}");
    }

    #[test]
    fn application_rate() {
        let params = ErasingParams::default();
        let hits = (0..10_000u64)
            .filter(|&i| sample_erase_window(200, 150, &mut derive_stream(2, "e", i, 0), &params).is_some())
            .count();
        assert!((hits as f64 / 10_000.0 - 0.5).abs() < 0.02, "{hits}");
    }

    #[test]
    fn reproducible_noise() {
        let params = ErasingParams {
            apply_probability: 1.0,
            ..Default::default()
        };
        let a = random_erasing(&img(), &mut derive_stream(5, "r", 0, 0), &params);
        let b = random_erasing(&img(), &mut derive_stream(5, "r", 0, 0), &params);
        assert_eq!(a, b);
    }

    #[test]
    fn noise_is_roughly_uniform() {
        let params = ErasingParams {
            apply_probability: 1.0,
            area_fraction_range: (0.25, 0.30),
            ..Default::default()
        };
        let src = ImageBuffer::filled(100, 100, [0; 3]);
        let (out, win) = random_erasing_with_window(&src, &mut derive_stream(6, "n", 0, 0), &params);
        let win = win.unwrap();
        assert!(win.w * win.h >= 1000);
        for c in 0..3 {
            let mut sum = 0.0;
            for y in win.y..win.y + win.h {
                for x in win.x..win.x + win.w {
                    sum += out.pixel(x, y)[c] as f64;
                }
            }
            let mean = sum / (win.w * win.h) as f64;
            assert!((mean - 127.5).abs() < 5.0, "channel {c}: {mean}");
        }
    }

    #[test]
    fn tiny_image_skips_when_nothing_fits() {
        let params = ErasingParams {
            apply_probability: 1.0,
            area_fraction_range: (0.02, 0.02),
            ..Default::default()
        };
        // 0.02 * 4 = 0.08 px: rounds to zero every attempt.
        let src = ImageBuffer::filled(2, 2, [9; 3]);
        assert_eq!(random_erasing(&src, &mut derive_stream(0, "t", 0, 0), &params), src);
    }

    #[test]
    fn validation() {
        assert!(ErasingParams::default().validate().is_ok());
        let bad = ErasingParams {
            area_fraction_range: (0.4, 0.3),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
