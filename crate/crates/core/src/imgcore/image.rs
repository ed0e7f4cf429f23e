use std::path::Path;

use image::{GrayImage, ImageReader, RgbImage};

use super::to_u8;
use crate::{Error, Result};

/// Owned 8-bit RGB raster, row-major, interleaved.
#[derive(Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl std::fmt::Debug for ImageBuffer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ImageBuffer")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

/// How out-of-range source coordinates are resolved when sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    /// Repeat the border pixel.
    Clamp,
    /// Mirror about the half-pixel boundary (`c b a | a b c | c b a`).
    Symmetric,
}

impl ImageBuffer {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(Error::InvalidImage(format!(
                "{width}x{height} RGB needs {expected} bytes, got {}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Panics if either dimension is zero.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        Self::from_fn(width, height, |_, _| rgb)
    }

    /// Panics if either dimension is zero.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 3
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = self.offset(x, y);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = self.offset(x, y);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// Applies `f` to every pixel, keeping dimensions.
    pub fn map_pixels(&self, mut f: impl FnMut([u8; 3]) -> [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for p in self.pixels() {
            data.extend_from_slice(&f(p));
        }
        Self {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Bilinear sample at continuous pixel-center coordinates.
    pub fn sample_bilinear(&self, x: f64, y: f64, edge: Edge) -> [f64; 3] {
        let (x, y) = match edge {
            Edge::Clamp => (x, y),
            Edge::Symmetric => (reflect(x, self.width), reflect(y, self.height)),
        };
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        let x = x.clamp(0.0, max_x);
        let y = y.clamp(0.0, max_y);
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let x0 = x0 as u32;
        let y0 = y0 as u32;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);

        let p00 = self.pixel(x0, y0);
        let p10 = self.pixel(x1, y0);
        let p01 = self.pixel(x0, y1);
        let p11 = self.pixel(x1, y1);
        let mut out = [0.0; 3];
        for c in 0..3 {
            let top = p00[c] as f64 + fx * (p10[c] as f64 - p00[c] as f64);
            let bottom = p01[c] as f64 + fx * (p11[c] as f64 - p01[c] as f64);
            out[c] = top + fy * (bottom - top);
        }
        out
    }

    /// Builds an image of the given size by backward-mapping every output
    /// pixel through `map` and sampling bilinearly.
    pub(crate) fn remap(
        &self,
        out_w: u32,
        out_h: u32,
        edge: Edge,
        map: impl Fn(f64, f64) -> (f64, f64) + Sync,
    ) -> Self {
        let row_len = out_w as usize * 3;
        let mut data = vec![0u8; row_len * out_h as usize];
        let fill_row = |y: usize, row: &mut [u8]| {
            for x in 0..out_w as usize {
                let (sx, sy) = map(x as f64, y as f64);
                let v = self.sample_bilinear(sx, sy, edge);
                row[x * 3] = to_u8(v[0]);
                row[x * 3 + 1] = to_u8(v[1]);
                row[x * 3 + 2] = to_u8(v[2]);
            }
        };
        crate::par::for_each_row(&mut data, row_len, fill_row);
        Self {
            width: out_w,
            height: out_h,
            data,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let decoded = ImageReader::open(path)
            .map_err(|e| Error::io(path, e))?
            .with_guessed_format()
            .map_err(|e| Error::io(path, e))?
            .decode()
            .map_err(|e| Error::Decode {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        Ok(Self::from(decoded.to_rgb8()))
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let img = RgbImage::from_raw(self.width, self.height, self.data.clone())
            .expect("buffer length checked at construction");
        img.save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| Error::Decode {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
    }
}

impl From<RgbImage> for ImageBuffer {
    fn from(img: RgbImage) -> Self {
        let (width, height) = img.dimensions();
        Self {
            width,
            height,
            data: img.into_raw(),
        }
    }
}

/// Folds a continuous coordinate into `[-0.5, len - 0.5]` by mirroring
/// about the outer pixel edges.
#[inline]
fn reflect(v: f64, len: u32) -> f64 {
    let len = len as f64;
    let lo = -0.5;
    if v >= lo && v <= len - 0.5 {
        return v;
    }
    let period = 2.0 * len;
    let t = (v - lo).rem_euclid(period);
    if t <= len {
        t + lo
    } else {
        period - t + lo
    }
}

/// Binary segmentation raster, `true` = lesion.
#[derive(Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl std::fmt::Debug for Mask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Mask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("foreground", &self.count())
            .finish()
    }
}

impl Mask {
    pub fn new(width: u32, height: u32, data: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width as usize * height as usize {
            return Err(Error::InvalidImage(format!(
                "mask {width}x{height} with {} entries",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.data[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// Inclusive bounding box `(x0, y0, x1, y1)` of the foreground.
    pub fn bbox(&self) -> Option<(u32, u32, u32, u32)> {
        let mut bb: Option<(u32, u32, u32, u32)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    bb = Some(match bb {
                        None => (x, y, x, y),
                        Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
                    });
                }
            }
        }
        bb
    }

    /// Loads an 8-bit grayscale PNG; values >= 128 are foreground.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let decoded = ImageReader::open(path)
            .map_err(|e| Error::io(path, e))?
            .with_guessed_format()
            .map_err(|e| Error::io(path, e))?
            .decode()
            .map_err(|e| Error::Decode {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        let gray = decoded.to_luma8();
        let (width, height) = gray.dimensions();
        let data = gray.into_raw().into_iter().map(|v| v >= 128).collect();
        Mask::new(width, height, data)
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let raw = self.data.iter().map(|&v| if v { 255 } else { 0 }).collect();
        let img = GrayImage::from_raw(self.width, self.height, raw).expect("length checked");
        img.save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| Error::Decode {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
    }
}

/// One labelled dataset item.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub image: ImageBuffer,
    pub mask: Option<Mask>,
    /// Melanoma flag.
    pub label: bool,
}

impl Sample {
    pub fn new(
        id: impl Into<String>,
        image: ImageBuffer,
        mask: Option<Mask>,
        label: bool,
    ) -> Result<Self> {
        let id = id.into();
        if let Some(m) = &mask {
            if (m.width(), m.height()) != image.dimensions() {
                return Err(Error::InvalidImage(format!(
                    "sample {id}: mask {}x{} does not match image {}x{}",
                    m.width(),
                    m.height(),
                    image.width(),
                    image.height()
                )));
            }
            if m.count() == 0 {
                return Err(Error::EmptyMask { id });
            }
        }
        Ok(Self {
            id,
            image,
            mask,
            label,
        })
    }
}

/// Bilinear stretch to exactly `out_w` x `out_h`, pixel-center aligned.
pub fn resize_to(img: &ImageBuffer, out_w: u32, out_h: u32) -> Result<ImageBuffer> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidParameter(format!(
            "resize target must be positive, got {out_w}x{out_h}"
        )));
    }
    if img.dimensions() == (out_w, out_h) {
        return Ok(img.clone());
    }
    let sx = img.width() as f64 / out_w as f64;
    let sy = img.height() as f64 / out_h as f64;
    Ok(img.remap(out_w, out_h, Edge::Clamp, move |x, y| {
        ((x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5)
    }))
}

/// Shrinks so the longer side is at most `max_side`; smaller images pass
/// through unchanged.
pub fn resize_max_side(img: &ImageBuffer, max_side: u32) -> Result<ImageBuffer> {
    if max_side == 0 {
        return Err(Error::InvalidParameter("max_side must be >= 1".into()));
    }
    let (w, h) = img.dimensions();
    let longest = w.max(h);
    if longest <= max_side {
        return Ok(img.clone());
    }
    let scale = |side: u32| -> u32 {
        let v = (side as u64 * max_side as u64) as f64 / longest as f64;
        (v.round() as u32).max(1)
    };
    let (out_w, out_h) = if w >= h {
        (max_side, scale(h))
    } else {
        (scale(w), max_side)
    };
    resize_to(img, out_w, out_h)
}

/// Per-channel mean/std in the `[0, 1]` intensity scale.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Normalization {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl Normalization {
    /// Channel statistics of the ImageNet training set.
    pub const IMAGENET: Normalization = Normalization {
        mean: [0.485, 0.456, 0.406],
        std: [0.229, 0.224, 0.225],
    };
}

impl Default for Normalization {
    fn default() -> Self {
        Self::IMAGENET
    }
}

/// Real-valued HWC tensor produced by [`normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTensor {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl NormalizedTensor {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Interleaved HWC values.
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Inverse affine map back to `[0, 1]` intensities.
    pub fn denormalize(&self, norm: &Normalization) -> Vec<f64> {
        self.data
            .iter()
            .enumerate()
            .map(|(i, &v)| v as f64 * norm.std[i % 3] + norm.mean[i % 3])
            .collect()
    }
}

pub fn normalize(img: &ImageBuffer, norm: &Normalization) -> Result<NormalizedTensor> {
    if norm.std.iter().any(|&s| s <= 0.0 || !s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "std components must be positive, got {:?}",
            norm.std
        )));
    }
    if norm.mean.iter().any(|m| !m.is_finite()) {
        return Err(Error::InvalidParameter("mean must be finite".into()));
    }
    let data = img
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| ((v as f64 / 255.0 - norm.mean[i % 3]) / norm.std[i % 3]) as f32)
        .collect();
    Ok(NormalizedTensor {
        width: img.width(),
        height: img.height(),
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: u32, h: u32) -> ImageBuffer {
        ImageBuffer::from_fn(w, h, |x, y| [(x * 7 % 256) as u8, (y * 5 % 256) as u8, 9])
    }

    #[test]
    fn rejects_bad_buffers() {
        assert!(ImageBuffer::new(0, 1, vec![]).is_err());
        assert!(ImageBuffer::new(2, 2, vec![0; 11]).is_err());
        assert!(ImageBuffer::new(2, 2, vec![0; 12]).is_ok());
    }

    #[test]
    fn resize_max_side_examples() {
        let img = ImageBuffer::filled(2048, 1024, [10, 20, 30]);
        assert_eq!(resize_max_side(&img, 1024).unwrap().dimensions(), (1024, 512));

        let img = gradient(800, 600);
        assert_eq!(resize_max_side(&img, 1024).unwrap(), img);

        // round(1000 * 1024 / 3000) = round(341.33) = 341
        let img = ImageBuffer::filled(3000, 1000, [1, 2, 3]);
        let expected_short = (1000u64 * 1024 + 1500) / 3000;
        assert_eq!(expected_short, 341);
        assert_eq!(
            resize_max_side(&img, 1024).unwrap().dimensions(),
            (1024, expected_short as u32)
        );
    }

    #[test]
    fn resize_max_side_portrait_and_tiny() {
        let img = ImageBuffer::filled(10, 3000, [0, 0, 0]);
        // 10 * 1024 / 3000 = 3.41 -> 3
        assert_eq!(resize_max_side(&img, 1024).unwrap().dimensions(), (3, 1024));
        let img = ImageBuffer::filled(1, 5000, [0, 0, 0]);
        assert_eq!(resize_max_side(&img, 100).unwrap().dimensions(), (1, 100));
        assert!(resize_max_side(&img, 0).is_err());
    }

    #[test]
    fn resize_to_dims_and_identity() {
        let img = gradient(1024, 512);
        assert_eq!(resize_to(&img, 224, 224).unwrap().dimensions(), (224, 224));
        let sq = gradient(299, 299);
        assert_eq!(resize_to(&sq, 299, 299).unwrap(), sq);
        assert!(resize_to(&sq, 0, 10).is_err());
    }

    #[test]
    fn upscale_checkerboard_keeps_corners() {
        let img = ImageBuffer::from_fn(2, 2, |x, y| if (x + y) % 2 == 0 { [255; 3] } else { [0; 3] });
        let up = resize_to(&img, 4, 4).unwrap();
        // Output (0,0) maps to source (-0.25,-0.25), clamped to the corner.
        assert_eq!(up.pixel(0, 0), [255; 3]);
        assert_eq!(up.pixel(3, 0), [0; 3]);
        assert_eq!(up.pixel(0, 3), [0; 3]);
        assert_eq!(up.pixel(3, 3), [255; 3]);
        // (1,0) -> source x = 0.25: 255 * 0.75 = 191.25 -> 191
        assert_eq!(up.pixel(1, 0), [191; 3]);
    }

    #[test]
    fn reflect_is_symmetric_about_half_pixel() {
        assert_eq!(reflect(-1.0, 3), 0.0);
        assert_eq!(reflect(-0.5, 3), -0.5);
        assert_eq!(reflect(3.0, 3), 2.0);
        assert_eq!(reflect(4.0, 3), 1.0);
        assert_eq!(reflect(-4.0, 3), 2.0);
        assert_eq!(reflect(7.0, 3), 1.0);
        let img = ImageBuffer::from_fn(3, 1, |x, _| [x as u8 * 10, 0, 0]);
        assert_eq!(img.sample_bilinear(-1.0, 0.0, Edge::Symmetric)[0], 0.0);
        assert_eq!(img.sample_bilinear(-2.0, 0.0, Edge::Symmetric)[0], 10.0);
        assert_eq!(img.sample_bilinear(4.0, 0.0, Edge::Symmetric)[0], 10.0);
    }

    #[test]
    fn normalize_examples() {
        let norm = Normalization::IMAGENET;
        let white = ImageBuffer::filled(1, 1, [255; 3]);
        let t = normalize(&white, &norm).unwrap();
        let expected = [(1.0 - 0.485) / 0.229, (1.0 - 0.456) / 0.224, (1.0 - 0.406) / 0.225];
        for (got, want) in t.data().iter().zip(expected) {
            assert!((*got as f64 - want).abs() < 1e-5);
        }
        assert!((t.data()[0] - 2.2489).abs() < 1e-3);
        assert!((t.data()[1] - 2.4286).abs() < 1e-3);
        assert!((t.data()[2] - 2.6400).abs() < 1e-3);

        let id = Normalization {
            mean: [0.0; 3],
            std: [1.0; 3],
        };
        assert_eq!(normalize(&white, &id).unwrap().data(), &[1.0, 1.0, 1.0]);

        let half = Normalization {
            mean: [102.0 / 255.0; 3],
            std: [0.3, 2.0, 7.0],
        };
        let img = ImageBuffer::filled(2, 1, [102; 3]);
        assert!(normalize(&img, &half).unwrap().data().iter().all(|&v| v == 0.0));

        let bad = Normalization {
            mean: [0.0; 3],
            std: [1.0, 0.0, 1.0],
        };
        assert!(normalize(&white, &bad).is_err());
    }

    #[test]
    fn sample_rejects_mismatched_or_empty_mask() {
        let img = ImageBuffer::filled(4, 4, [0; 3]);
        let small = Mask::from_fn(3, 4, |_, _| true);
        assert!(Sample::new("a", img.clone(), Some(small), false).is_err());
        let empty = Mask::from_fn(4, 4, |_, _| false);
        assert!(matches!(
            Sample::new("a", img.clone(), Some(empty), false),
            Err(Error::EmptyMask { .. })
        ));
        let ok = Mask::from_fn(4, 4, |x, _| x == 2);
        let s = Sample::new("a", img, Some(ok), true).unwrap();
        assert_eq!(s.mask.unwrap().bbox(), Some((2, 0, 2, 3)));
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = gradient(13, 7);
        let p = dir.path().join("g.png");
        img.save_png(&p).unwrap();
        assert_eq!(ImageBuffer::load(&p).unwrap(), img);

        let m = Mask::from_fn(5, 4, |x, y| x > y);
        let mp = dir.path().join("m.png");
        m.save_png(&mp).unwrap();
        assert_eq!(Mask::load(&mp).unwrap(), m);
    }

    #[test]
    fn grayscale_and_rgba_inputs_become_rgb() {
        let dir = tempfile::tempdir().unwrap();
        let gray = GrayImage::from_fn(3, 2, |x, _| image::Luma([x as u8 * 40]));
        let p = dir.path().join("gray.png");
        gray.save(&p).unwrap();
        let img = ImageBuffer::load(&p).unwrap();
        assert_eq!(img.pixel(2, 1), [80, 80, 80]);

        let rgba = image::RgbaImage::from_fn(2, 2, |_, _| image::Rgba([1, 2, 3, 0]));
        let p = dir.path().join("rgba.png");
        rgba.save(&p).unwrap();
        assert_eq!(ImageBuffer::load(&p).unwrap().pixel(1, 1), [1, 2, 3]);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            ImageBuffer::load("/nonexistent/x.png"),
            Err(Error::Io { .. })
        ));
    }
}
