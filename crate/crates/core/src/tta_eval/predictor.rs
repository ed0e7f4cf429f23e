use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Command, Stdio};

use crate::{Error, ImageBuffer, Result};

/// Melanoma probability source. `images[k]` is copy `k` of `sample_id`.
pub trait Predictor: Sync {
    fn predict(&self, sample_id: &str, images: &[ImageBuffer]) -> Result<Vec<f64>>;
}

/// Wraps a closure `(sample id, copy index, image) -> probability`.
pub struct FnPredictor<F>(pub F);

impl<F> Predictor for FnPredictor<F>
where
    F: Fn(&str, usize, &ImageBuffer) -> f64 + Sync,
{
    fn predict(&self, sample_id: &str, images: &[ImageBuffer]) -> Result<Vec<f64>> {
        Ok(images
            .iter()
            .enumerate()
            .map(|(k, img)| (self.0)(sample_id, k, img))
            .collect())
    }
}

/// Precomputed predictions keyed by `(id, copy)`, read from
/// `id,copy,probability` CSV.
#[derive(Debug, Clone, Default)]
pub struct PredictionTable {
    table: HashMap<(String, usize), f64>,
}

impl PredictionTable {
    pub fn insert(&mut self, id: impl Into<String>, copy: usize, probability: f64) {
        self.table.insert((id.into(), copy), probability);
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let err = |line: usize, message: String| Error::Manifest {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end_matches('\r') == "id,copy,probability" => {}
            _ => return Err(err(1, "expected header \"id,copy,probability\"".into())),
        }
        let mut out = Self::default();
        for (i, raw) in lines {
            let line = raw.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(err(i + 1, format!("expected 3 columns, got {}", cols.len())));
            }
            let copy = cols[1]
                .parse()
                .map_err(|_| err(i + 1, format!("bad copy index {:?}", cols[1])))?;
            let p: f64 = cols[2]
                .parse()
                .map_err(|_| err(i + 1, format!("bad probability {:?}", cols[2])))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(err(i + 1, format!("probability {p} outside [0, 1]")));
            }
            out.insert(cols[0], copy, p);
        }
        Ok(out)
    }
}

impl Predictor for PredictionTable {
    fn predict(&self, sample_id: &str, images: &[ImageBuffer]) -> Result<Vec<f64>> {
        (0..images.len())
            .map(|k| {
                self.table
                    .get(&(sample_id.to_string(), k))
                    .copied()
                    .ok_or_else(|| Error::Predictor {
                        id: sample_id.into(),
                        copy: k,
                        message: "no precomputed prediction".into(),
                    })
            })
            .collect()
    }
}

/// Runs a shell command per sample. The images are written as PNGs to a
/// temporary directory, their absolute paths sent one per line on stdin,
/// and one probability per line is read back from stdout in the same order.
#[derive(Debug, Clone)]
pub struct ProcessPredictor {
    pub command: String,
}

impl ProcessPredictor {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
        }
    }
}

impl Predictor for ProcessPredictor {
    fn predict(&self, sample_id: &str, images: &[ImageBuffer]) -> Result<Vec<f64>> {
        let fail = |copy: usize, message: String| Error::Predictor {
            id: sample_id.into(),
            copy,
            message,
        };
        let dir = tempfile::tempdir().map_err(|e| fail(0, format!("temp dir: {e}")))?;
        let mut listing = String::new();
        for (k, img) in images.iter().enumerate() {
            let path = dir.path().join(format!("{k:04}.png"));
            img.save_png(&path).map_err(|e| fail(k, e.to_string()))?;
            let abs = std::fs::canonicalize(&path).map_err(|e| fail(k, e.to_string()))?;
            listing.push_str(&abs.to_string_lossy());
            listing.push('\n');
        }

        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| fail(0, format!("spawn {:?}: {e}", self.command)))?;

        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = std::thread::spawn(move || {
            let _ = stdin.write_all(listing.as_bytes());
        });
        let stdout = child.stdout.take().expect("piped stdout");
        let mut probs = Vec::with_capacity(images.len());
        let mut read_error = None;
        for line in BufReader::new(stdout).lines() {
            let line = match line {
                Ok(l) => l,
                Err(e) => {
                    read_error = Some(fail(probs.len(), e.to_string()));
                    break;
                }
            };
            let k = probs.len();
            match line.trim().parse::<f64>() {
                Ok(p) if (0.0..=1.0).contains(&p) => probs.push(p),
                _ => {
                    read_error = Some(fail(k, format!("unparsable output line {line:?}")));
                    break;
                }
            }
        }
        let _ = writer.join();
        let status = child.wait().map_err(|e| fail(0, e.to_string()))?;
        if let Some(e) = read_error {
            return Err(e);
        }
        if !status.success() {
            return Err(fail(probs.len().min(images.len().saturating_sub(1)), format!("predictor exited with {status}")));
        }
        if probs.len() != images.len() {
            return Err(fail(
                probs.len(),
                format!("expected {} predictions, got {}", images.len(), probs.len()),
            ));
        }
        Ok(probs)
    }
}
