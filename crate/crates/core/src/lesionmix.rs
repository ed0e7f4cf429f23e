//! Lesion Mix (scenario I): paste a mask-segmented foreground lesion into a
//! background lesion image.
//!
//! The foreground is cut to its mask bounding box, shrunk if it would not
//! fit, color-matched to the background lesion by per-channel CDF matching,
//! and alpha-composited at the center of the background lesion's bounding
//! box. Alpha is the Gaussian-blurred binary mask. The result is melanoma
//! iff either source is.

use serde::{Deserialize, Serialize};

use crate::imgcore::{resize_to, to_u8};
use crate::{Error, ImageBuffer, Mask, Result, Sample};

/// Per-channel 256-entry lookup tables.
pub type ChannelLuts = [[u8; 256]; 3];

/// Alpha values this close to 0 or 1 are snapped.
const ALPHA_SNAP: f64 = 1e-6;

fn channel_hist(pixels: &[[u8; 3]], c: usize) -> [u64; 256] {
    let mut h = [0u64; 256];
    for p in pixels {
        h[p[c] as usize] += 1;
    }
    h
}

fn cumulative(hist: &[u64; 256]) -> [u64; 256] {
    let mut out = [0u64; 256];
    let mut acc = 0;
    for (o, &h) in out.iter_mut().zip(hist) {
        acc += h;
        *o = acc;
    }
    out
}

/// CDF matching: `lut[v]` is the smallest `r` with
/// `CDF_ref(r) >= CDF_src(v)`, evaluated in exact integer arithmetic.
pub fn histogram_match(source: &[[u8; 3]], reference: &[[u8; 3]]) -> Result<ChannelLuts> {
    if source.is_empty() || reference.is_empty() {
        return Err(Error::InvalidParameter(
            "histogram matching needs non-empty pixel sets".into(),
        ));
    }
    let n_src = source.len() as u128;
    let n_ref = reference.len() as u128;
    let mut luts = [[0u8; 256]; 3];
    for (c, lut) in luts.iter_mut().enumerate() {
        let cdf_src = cumulative(&channel_hist(source, c));
        let cdf_ref = cumulative(&channel_hist(reference, c));
        let mut r = 0usize;
        for v in 0..256 {
            // CDF_ref(r) / n_ref >= CDF_src(v) / n_src, cross-multiplied.
            while (cdf_ref[r] as u128) * n_src < (cdf_src[v] as u128) * n_ref {
                r += 1;
            }
            lut[v] = r as u8;
        }
    }
    Ok(luts)
}

pub fn apply_luts(luts: &ChannelLuts, p: [u8; 3]) -> [u8; 3] {
    [luts[0][p[0] as usize], luts[1][p[1] as usize], luts[2][p[2] as usize]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixParams {
    /// Gaussian sigma of the alpha feather in pixels; `None` picks 2% of the
    /// foreground bounding-box diagonal.
    pub feather_sigma: Option<f64>,
    /// Foreground bounding box may span at most this fraction of the
    /// background's shorter side.
    pub scale_cap: f64,
}

impl Default for MixParams {
    fn default() -> Self {
        Self {
            feather_sigma: None,
            scale_cap: 0.9,
        }
    }
}

impl MixParams {
    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.feather_sigma {
            if !(s >= 1.0 && s.is_finite()) {
                return Err(Error::Config(format!(
                    "mix.feather_sigma must be >= 1, got {s}"
                )));
            }
        }
        if !(self.scale_cap > 0.0 && self.scale_cap <= 1.0) {
            return Err(Error::Config(format!(
                "mix.scale_cap must lie in (0, 1], got {}",
                self.scale_cap
            )));
        }
        Ok(())
    }
}

/// Composite plus the per-pixel alpha actually used, for inspection.
#[derive(Debug, Clone)]
pub struct MixOutput {
    pub sample: Sample,
    /// Alpha over the background raster, row-major.
    pub alpha: Vec<f64>,
    /// Histogram-matched foreground placed on the background raster; only
    /// meaningful where `alpha > 0`.
    pub matched_foreground: ImageBuffer,
}

pub fn lesion_mix(background: &Sample, foreground: &Sample, params: &MixParams) -> Result<Sample> {
    lesion_mix_detailed(background, foreground, params).map(|o| o.sample)
}

pub fn lesion_mix_detailed(
    background: &Sample,
    foreground: &Sample,
    params: &MixParams,
) -> Result<MixOutput> {
    params.validate()?;
    let bg_mask = background.mask.as_ref().ok_or_else(|| Error::MissingMask {
        id: background.id.clone(),
    })?;
    let fg_mask = foreground.mask.as_ref().ok_or_else(|| Error::MissingMask {
        id: foreground.id.clone(),
    })?;
    let (bx0, by0, bx1, by1) = bg_mask.bbox().ok_or_else(|| Error::EmptyMask {
        id: background.id.clone(),
    })?;
    let (fx0, fy0, fx1, fy1) = fg_mask.bbox().ok_or_else(|| Error::EmptyMask {
        id: foreground.id.clone(),
    })?;

    // 1. Cut the foreground to its lesion bounding box.
    let fw = fx1 - fx0 + 1;
    let fh = fy1 - fy0 + 1;
    let mut fg_img = ImageBuffer::from_fn(fw, fh, |x, y| foreground.image.pixel(fx0 + x, fy0 + y));
    let mut fg_mask = Mask::from_fn(fw, fh, |x, y| fg_mask.get(fx0 + x, fy0 + y));

    // 2. Shrink to fit.
    let (bw, bh) = background.image.dimensions();
    let cap = params.scale_cap * bw.min(bh) as f64;
    if fw.max(fh) as f64 > cap {
        let s = cap / fw.max(fh) as f64;
        let nw = ((fw as f64 * s).floor() as u32).max(1);
        let nh = ((fh as f64 * s).floor() as u32).max(1);
        fg_img = resize_to(&fg_img, nw, nh)?;
        fg_mask = resize_mask_nearest(&fg_mask, nw, nh);
        if fg_mask.count() == 0 {
            return Err(Error::EmptyMask {
                id: foreground.id.clone(),
            });
        }
    }
    let (fw, fh) = (fg_img.width(), fg_img.height());

    // 3. Match foreground lesion colors to the background lesion.
    let fg_lesion: Vec<[u8; 3]> = masked_pixels(&fg_img, &fg_mask);
    let bg_lesion: Vec<[u8; 3]> = masked_pixels(&background.image, bg_mask);
    let luts = histogram_match(&fg_lesion, &bg_lesion)?;
    let matched = fg_img.map_pixels(|p| apply_luts(&luts, p));

    // 4. Feathered alpha on a canvas padded by the blur radius.
    let sigma = params
        .feather_sigma
        .unwrap_or_else(|| 0.02 * ((fw as f64).powi(2) + (fh as f64).powi(2)).sqrt())
        .max(1.0);
    let radius = (3.0 * sigma).ceil() as u32;
    let cw = fw + 2 * radius;
    let ch = fh + 2 * radius;
    let mut canvas = vec![0.0; cw as usize * ch as usize];
    for y in 0..fh {
        for x in 0..fw {
            if fg_mask.get(x, y) {
                canvas[(y + radius) as usize * cw as usize + (x + radius) as usize] = 1.0;
            }
        }
    }
    let alpha_canvas = gaussian_blur(&canvas, cw as usize, ch as usize, sigma, radius as usize);

    // 5. Place the foreground box centered on the background lesion box,
    // shifted inward so it stays inside the image.
    let center_x = (bx0 + bx1) as i64 / 2;
    let center_y = (by0 + by1) as i64 / 2;
    let ox = (center_x - fw as i64 / 2).clamp(0, (bw - fw) as i64);
    let oy = (center_y - fh as i64 / 2).clamp(0, (bh - fh) as i64);

    let mut out = background.image.clone();
    let mut out_mask = bg_mask.clone();
    let mut alpha = vec![0.0; bw as usize * bh as usize];
    let mut placed = background.image.clone();
    for cy in 0..ch as i64 {
        let ty = oy + cy - radius as i64;
        if ty < 0 || ty >= bh as i64 {
            continue;
        }
        for cx in 0..cw as i64 {
            let tx = ox + cx - radius as i64;
            if tx < 0 || tx >= bw as i64 {
                continue;
            }
            let a = alpha_canvas[cy as usize * cw as usize + cx as usize];
            if a == 0.0 {
                continue;
            }
            // Canvas pixel -> foreground box pixel, edge-clamped in the
            // padding ring.
            let sx = (cx - radius as i64).clamp(0, fw as i64 - 1) as u32;
            let sy = (cy - radius as i64).clamp(0, fh as i64 - 1) as u32;
            let f = matched.pixel(sx, sy);
            let (tx, ty) = (tx as u32, ty as u32);
            let b = background.image.pixel(tx, ty);
            let blended = if a == 1.0 {
                f
            } else {
                std::array::from_fn(|c| to_u8(b[c] as f64 + a * (f[c] as f64 - b[c] as f64)))
            };
            out.set_pixel(tx, ty, blended);
            placed.set_pixel(tx, ty, f);
            alpha[ty as usize * bw as usize + tx as usize] = a;
            let inside_box = (0..fw as i64).contains(&(cx - radius as i64))
                && (0..fh as i64).contains(&(cy - radius as i64));
            if inside_box && fg_mask.get(sx, sy) {
                out_mask.set(tx, ty, true);
            }
        }
    }

    let sample = Sample {
        id: format!("{}+{}", background.id, foreground.id),
        image: out,
        mask: Some(out_mask),
        label: background.label || foreground.label,
    };
    Ok(MixOutput {
        sample,
        alpha,
        matched_foreground: placed,
    })
}

fn masked_pixels(img: &ImageBuffer, mask: &Mask) -> Vec<[u8; 3]> {
    img.pixels()
        .zip(mask.data())
        .filter(|(_, &m)| m)
        .map(|(p, _)| p)
        .collect()
}

fn resize_mask_nearest(mask: &Mask, w: u32, h: u32) -> Mask {
    let sx = mask.width() as f64 / w as f64;
    let sy = mask.height() as f64 / h as f64;
    Mask::from_fn(w, h, |x, y| {
        let u = (((x as f64 + 0.5) * sx) as u32).min(mask.width() - 1);
        let v = (((y as f64 + 0.5) * sy) as u32).min(mask.height() - 1);
        mask.get(u, v)
    })
}

/// Separable Gaussian blur truncated at `radius`, zero outside, with
/// results snapped to exactly 0 or 1 near the ends and clipped to `[0, 1]`.
fn gaussian_blur(src: &[f64], w: usize, h: usize, sigma: f64, radius: usize) -> Vec<f64> {
    let taps: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let norm: f64 = taps.iter().sum();
    let taps: Vec<f64> = taps.iter().map(|t| t / norm).collect();

    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let sx = x as i64 + k as i64 - radius as i64;
                if (0..w as i64).contains(&sx) {
                    acc += t * src[y * w + sx as usize];
                }
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let sy = y as i64 + k as i64 - radius as i64;
                if (0..h as i64).contains(&sy) {
                    acc += t * tmp[sy as usize * w + x];
                }
            }
            out[y * w + x] = if acc < ALPHA_SNAP {
                0.0
            } else if acc > 1.0 - ALPHA_SNAP {
                1.0
            } else {
                acc
            };
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk_sample(id: &str, w: u32, h: u32, c: (f64, f64), r: f64, label: bool, tint: [u8; 3]) -> Sample {
        let inside = |x: u32, y: u32| {
            let dx = x as f64 - c.0;
            let dy = y as f64 - c.1;
            dx * dx + dy * dy <= r * r
        };
        let img = ImageBuffer::from_fn(w, h, |x, y| {
            if inside(x, y) {
                [
                    tint[0].saturating_add((x % 17) as u8),
                    tint[1].saturating_add((y % 13) as u8),
                    tint[2],
                ]
            } else {
                [220, 180, 160]
            }
        });
        let mask = Mask::from_fn(w, h, inside);
        Sample::new(id, img, Some(mask), label).unwrap()
    }

    #[test]
    fn self_match_is_identity_on_histogram() {
        let px: Vec<[u8; 3]> = (0..500u32).map(|i| [(i * 7 % 256) as u8, (i % 50) as u8, 3]).collect();
        let luts = histogram_match(&px, &px).unwrap();
        for lut in &luts {
            assert!(lut.windows(2).all(|w| w[0] <= w[1]));
        }
        let mapped: Vec<_> = px.iter().map(|&p| apply_luts(&luts, p)).collect();
        assert_eq!(mapped, px);
    }

    #[test]
    fn degenerate_match() {
        let luts = histogram_match(&[[50; 3]; 10], &[[200; 3]; 4]).unwrap();
        assert_eq!(luts[0][50], 200);
        assert_eq!(luts[2][50], 200);
        assert!(histogram_match(&[], &[[1; 3]]).is_err());
        assert!(histogram_match(&[[1; 3]], &[]).is_err());
    }

    #[test]
    fn uniform_to_half_range_matches_cdf_inversion_oracle() {
        let src: Vec<[u8; 3]> = (0..=255u8).map(|v| [v; 3]).collect();
        let reference: Vec<[u8; 3]> = (0..=127u8).map(|v| [v; 3]).collect();
        let luts = histogram_match(&src, &reference).unwrap();
        // Brute force: scan r upward with float CDFs.
        for (v, &got) in luts[0].iter().enumerate() {
            let cdf_src = (v + 1) as f64 / 256.0;
            let oracle = (0..256usize)
                .find(|&r| (r.min(127) + 1) as f64 / 128.0 >= cdf_src - 1e-12)
                .unwrap();
            assert_eq!(got as usize, oracle);
            assert!((got as f64 - v as f64 / 2.0).abs() <= 1.0);
        }
    }

    #[test]
    fn label_truth_table() {
        for (a, b) in [(false, false), (true, false), (false, true), (true, true)] {
            let bg = disk_sample("bg", 60, 50, (30.0, 25.0), 15.0, a, [90, 40, 30]);
            let fg = disk_sample("fg", 40, 40, (20.0, 20.0), 10.0, b, [60, 30, 80]);
            let out = lesion_mix(&bg, &fg, &MixParams::default()).unwrap();
            assert_eq!(out.label, a || b);
            assert_eq!(out.id, "bg+fg");
            assert_eq!(out.image.dimensions(), (60, 50));
        }
    }

    #[test]
    fn locality_and_full_opacity() {
        let bg = disk_sample("bg", 80, 70, (40.0, 35.0), 20.0, false, [90, 40, 30]);
        let fg = disk_sample("fg", 50, 50, (25.0, 25.0), 15.0, true, [50, 20, 90]);
        let params = MixParams {
            feather_sigma: Some(1.5),
            ..Default::default()
        };
        let o = lesion_mix_detailed(&bg, &fg, &params).unwrap();
        let mut opaque = 0;
        let mut untouched = 0;
        for y in 0..70 {
            for x in 0..80 {
                let a = o.alpha[y as usize * 80 + x as usize];
                assert!((0.0..=1.0).contains(&a));
                let out = o.sample.image.pixel(x, y);
                let b = bg.image.pixel(x, y);
                let f = o.matched_foreground.pixel(x, y);
                if a == 0.0 {
                    untouched += 1;
                    assert_eq!(out, b);
                } else if a == 1.0 {
                    opaque += 1;
                    assert_eq!(out, f);
                }
                for c in 0..3 {
                    let lo = b[c].min(f[c]);
                    let hi = b[c].max(f[c]);
                    assert!(out[c] >= lo && out[c] <= hi);
                }
            }
        }
        assert!(opaque > 150, "{opaque}");
        assert!(untouched > 1000, "{untouched}");
        // Output mask is the union.
        let m = o.sample.mask.unwrap();
        for y in 0..70 {
            for x in 0..80 {
                if bg.mask.as_ref().unwrap().get(x, y) {
                    assert!(m.get(x, y));
                }
            }
        }
        assert!(m.count() >= bg.mask.as_ref().unwrap().count());
    }

    #[test]
    fn oversized_foreground_is_shrunk() {
        let bg = disk_sample("bg", 40, 30, (20.0, 15.0), 8.0, false, [90, 40, 30]);
        let fg = disk_sample("fg", 200, 200, (100.0, 100.0), 90.0, false, [50, 20, 90]);
        let o = lesion_mix_detailed(&bg, &fg, &MixParams::default()).unwrap();
        assert_eq!(o.sample.image.dimensions(), (40, 30));
        let m = o.sample.mask.unwrap();
        // Foreground box capped at 0.9 * 30 = 27 px.
        let (x0, y0, x1, y1) = m.bbox().unwrap();
        assert!(x1 - x0 < 27 && y1 - y0 < 27);
    }

    #[test]
    fn missing_masks() {
        let bg = disk_sample("bg", 20, 20, (10.0, 10.0), 5.0, false, [1, 2, 3]);
        let mut fg = bg.clone();
        fg.mask = None;
        fg.id = "nomask".into();
        assert!(matches!(
            lesion_mix(&bg, &fg, &MixParams::default()),
            Err(Error::MissingMask { id }) if id == "nomask"
        ));
        assert!(matches!(
            lesion_mix(&fg, &bg, &MixParams::default()),
            Err(Error::MissingMask { .. })
        ));
    }
}
