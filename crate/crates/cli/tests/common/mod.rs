//! Synthetic datasets and a thin wrapper around the built binaries.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use skinaug::{derive_stream, ImageBuffer, Manifest, Mask, Record, RngStream, Split};

pub fn skinaug(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skinaug"))
        .args(args)
        .output()
        .expect("spawn skinaug")
}

pub fn blob_predictor_cmd() -> String {
    format!("'{}'", env!("CARGO_BIN_EXE_blob-predictor"))
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let h = h.rem_euclid(1.0) * 6.0;
    let i = h.floor();
    let f = h - i;
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - s * f), v * (1.0 - s * (1.0 - f)));
    let (r, g, b) = match i as u32 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    [r, g, b].map(|c| (c * 255.0).round().clamp(0.0, 255.0) as u8)
}

fn disk(w: u32, h: u32, cx: f64, cy: f64, r: f64) -> Mask {
    Mask::from_fn(w, h, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        dx * dx + dy * dy <= r * r
    })
}

/// Skin-toned background with a darker disk lesion; labels alternate.
pub fn lesion_fixture(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let mut records = Vec::new();
    for i in 0..n {
        let mut rng = derive_stream(seed, "lesion-fixture", i as u64, 0);
        let (w, h) = (72 + rng.up_to(48), 64 + rng.up_to(40));
        let r = 10.0 + rng.uniform(0.0, (w.min(h) as f64) / 4.0);
        let cx = rng.uniform(r, w as f64 - r);
        let cy = rng.uniform(r, h as f64 - r);
        let mask = disk(w, h, cx, cy, r);
        let tone = rng.uniform(0.02, 0.08);
        let img = ImageBuffer::from_fn(w, h, |x, y| {
            let noise = ((x * 7 + y * 13 + i as u32 * 5) % 17) as f64 / 170.0;
            if mask.get(x, y) {
                hsv_to_rgb(tone, 0.6, 0.35 + noise)
            } else {
                hsv_to_rgb(0.07, 0.25, 0.85 + noise / 2.0)
            }
        });
        let id = format!("les{i:03}");
        img.save_png(dir.join(format!("{id}.png"))).unwrap();
        mask.save_png(dir.join(format!("{id}_mask.png"))).unwrap();
        records.push(Record {
            id: id.clone(),
            image: format!("{id}.png"),
            mask: Some(format!("{id}_mask.png")),
            label: i % 2 == 0,
        });
    }
    save_manifest(dir, records)
}

/// Separable two-class blobs on a pale background: positives are red with
/// hue in `[-0.03, 0.03]`, negatives blue with hue in `[0.45, 0.65]`.
pub fn blob_dataset(dir: &Path, n: usize, side: u32, seed: u64) -> PathBuf {
    let mut records = Vec::new();
    for i in 0..n {
        let mut rng = derive_stream(seed, "blobs", i as u64, 0);
        let positive = i % 2 == 0;
        let hue = if positive {
            rng.uniform(-0.03, 0.03)
        } else {
            rng.uniform(0.45, 0.65)
        };
        let s = side as f64;
        let r = rng.uniform(0.12 * s, 0.3 * s);
        let cx = rng.uniform(r, s - r);
        let cy = rng.uniform(r, s - r);
        let img = blob_image(side, hue, cx, cy, r, &mut rng);
        let id = format!("blob{i:03}");
        img.save_png(dir.join(format!("{id}.png"))).unwrap();
        records.push(Record {
            id: id.clone(),
            image: format!("{id}.png"),
            mask: None,
            label: positive,
        });
    }
    save_manifest(dir, records)
}

fn blob_image(side: u32, hue: f64, cx: f64, cy: f64, r: f64, rng: &mut RngStream) -> ImageBuffer {
    let jitter: Vec<f64> = (0..side * side).map(|_| rng.uniform(-0.05, 0.05)).collect();
    ImageBuffer::from_fn(side, side, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        let j = jitter[(y * side + x) as usize];
        if dx * dx + dy * dy <= r * r {
            hsv_to_rgb(hue, 0.7 + j, 0.7 + j)
        } else {
            hsv_to_rgb(0.08, 0.12, 0.9 + j)
        }
    })
}

fn save_manifest(dir: &Path, records: Vec<Record>) -> PathBuf {
    let m = Manifest::new(Split::Test, records, dir).unwrap();
    let path = dir.join("manifest.csv");
    m.save(&path).unwrap();
    path
}

/// Every file under `dir` as (relative path, bytes), sorted.
pub fn snapshot(dir: &Path, skip: &[&str]) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
                continue;
            }
            let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
            if !skip.contains(&rel.as_str()) {
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
