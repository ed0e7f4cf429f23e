//! Scripted predictor for the external-process protocol: reads one image
//! path per line on stdin and prints the fraction of red blob pixels.

use std::io::{self, BufRead, Write};
use std::process::ExitCode;

/// Red hue band, in turns either side of 0.
const HUE_BAND: f32 = 0.2;
const MIN_SATURATION: f32 = 0.35;
const MIN_VALUE: f32 = 0.2;

fn is_class_colored([r, g, b]: [u8; 3]) -> bool {
    let (r, g, b) = (r as f32 / 255.0, g as f32 / 255.0, b as f32 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    if max < MIN_VALUE || delta <= 0.0 || delta / max < MIN_SATURATION {
        return false;
    }
    let hue = if max == r {
        ((g - b) / delta) / 6.0
    } else if max == g {
        ((b - r) / delta + 2.0) / 6.0
    } else {
        ((r - g) / delta + 4.0) / 6.0
    };
    let hue = hue.rem_euclid(1.0);
    hue <= HUE_BAND || hue >= 1.0 - HUE_BAND
}

fn score(path: &str) -> Result<f64, String> {
    let img = image::open(path).map_err(|e| format!("{path}: {e}"))?.to_rgb8();
    let total = img.width() as u64 * img.height() as u64;
    if total == 0 {
        return Err(format!("{path}: empty image"));
    }
    let hits = img.pixels().filter(|p| is_class_colored(p.0)).count() as u64;
    Ok(hits as f64 / total as f64)
}

fn main() -> ExitCode {
    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    for line in stdin.lock().lines() {
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                eprintln!("blob-predictor: {e}");
                return ExitCode::from(2);
            }
        };
        let path = line.trim();
        if path.is_empty() {
            continue;
        }
        match score(path) {
            Ok(p) => {
                if writeln!(out, "{p}").and_then(|_| out.flush()).is_err() {
                    return ExitCode::from(2);
                }
            }
            Err(e) => {
                eprintln!("blob-predictor: {e}");
                return ExitCode::from(2);
            }
        }
    }
    ExitCode::SUCCESS
}
