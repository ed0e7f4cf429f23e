use crate::geometric::{crop, flip_horizontal, CropWindow};
use crate::imgcore::resize_to;
use crate::{Error, ImageBuffer, Result};

pub const CROP_COUNT: usize = 144;

/// Shorter-side targets at a 224 px input.
const BASE_SCALES: [u32; 4] = [256, 288, 320, 352];

/// Shorter-side lengths for `input_size`, scaled proportionally from the
/// 224 px set and rounded to the nearest even integer.
pub fn crop_scales(input_size: u32) -> [u32; 4] {
    BASE_SCALES.map(|s| {
        let v = s as f64 * input_size as f64 / 224.0;
        ((v / 2.0).round() as u32 * 2).max(input_size)
    })
}

/// Multi-scale crops: 4 scales x 3 squares along the longer side x
/// (4 corners + center + whole square) x (identity, mirror).
///
/// Patch `2k + 1` is the horizontal mirror of patch `2k`.
pub fn crops_144(img: &ImageBuffer, input_size: u32) -> Result<Vec<ImageBuffer>> {
    if input_size == 0 {
        return Err(Error::InvalidParameter("input size must be positive".into()));
    }
    let (w, h) = img.dimensions();
    let mut out = Vec::with_capacity(CROP_COUNT);
    for side in crop_scales(input_size) {
        let landscape = w >= h;
        let (short, long) = if landscape { (h, w) } else { (w, h) };
        let long_scaled = ((long as f64 * side as f64 / short as f64).round() as u32).max(side);
        let scaled = if landscape {
            resize_to(img, long_scaled, side)?
        } else {
            resize_to(img, side, long_scaled)?
        };
        let slack = long_scaled - side;
        for offset in [0, slack / 2, slack] {
            let square = if landscape {
                CropWindow { x: offset, y: 0, w: side, h: side }
            } else {
                CropWindow { x: 0, y: offset, w: side, h: side }
            };
            let square = crop(&scaled, &square)?;
            let far = side - input_size;
            let mid = far / 2;
            for (x, y) in [(0, 0), (far, 0), (0, far), (far, far), (mid, mid)] {
                let patch = crop(&square, &CropWindow { x, y, w: input_size, h: input_size })?;
                let mirrored = flip_horizontal(&patch);
                out.push(patch);
                out.push(mirrored);
            }
            let whole = resize_to(&square, input_size, input_size)?;
            let mirrored = flip_horizontal(&whole);
            out.push(whole);
            out.push(mirrored);
        }
    }
    debug_assert_eq!(out.len(), CROP_COUNT);
    Ok(out)
}
