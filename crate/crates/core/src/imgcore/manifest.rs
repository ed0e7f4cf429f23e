use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::{Error, Result};

pub const HEADER: &str = "id,image,mask,label";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Split {
    #[default]
    Train,
    Validation,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "val" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidParameter(format!("unknown split {other:?}"))),
        }
    }
}

/// One manifest row. Paths are kept exactly as written so that saving
/// reproduces the input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub id: String,
    pub image: String,
    pub mask: Option<String>,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub split: Split,
    pub records: Vec<Record>,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

/// Reads a manifest CSV; the split defaults to [`Split::Train`].
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    Manifest::load(path)
}

impl Manifest {
    pub fn new(split: Split, records: Vec<Record>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::InvalidParameter(format!("duplicate id {:?}", r.id)));
            }
        }
        Ok(Self {
            split,
            records,
            base_dir: base_dir.into(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, path, base_dir)
    }

    fn parse(text: &str, path: &Path, base_dir: PathBuf) -> Result<Self> {
        let err = |line: usize, message: String| Error::Manifest {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end_matches('\r') == HEADER => {}
            Some((_, h)) => return Err(err(1, format!("expected header {HEADER:?}, got {h:?}"))),
            None => return Err(err(1, "empty file".into())),
        }

        let mut records = Vec::new();
        let mut seen = HashSet::new();
        for (i, raw) in lines {
            let lineno = i + 1;
            let line = raw.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(err(lineno, format!("expected 4 columns, got {}", cols.len())));
            }
            let id = cols[0];
            if id.is_empty() {
                return Err(err(lineno, "empty id".into()));
            }
            if cols[1].is_empty() {
                return Err(err(lineno, "empty image path".into()));
            }
            let label = match cols[3] {
                "0" => false,
                "1" => true,
                other => return Err(err(lineno, format!("label must be 0 or 1, got {other:?}"))),
            };
            if !seen.insert(id.to_string()) {
                return Err(err(lineno, format!("duplicate id {id:?}")));
            }
            records.push(Record {
                id: id.to_string(),
                image: cols[1].to_string(),
                mask: (!cols[2].is_empty()).then(|| cols[2].to_string()),
                label,
            });
        }
        Ok(Self {
            split: Split::Train,
            records,
            base_dir,
        })
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.base_dir.join(rel)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.id,
                r.image,
                r.mask.as_deref().unwrap_or(""),
                u8::from(r.label)
            ));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Loads the image (and mask, when listed) of record `index`.
    pub fn load_sample(&self, index: usize) -> Result<super::Sample> {
        let r = &self.records[index];
        let image = super::ImageBuffer::load(self.resolve(&r.image))?;
        let mask = match &r.mask {
            Some(m) => Some(super::Mask::load(self.resolve(m))?),
            None => None,
        };
        super::Sample::new(r.id.clone(), image, mask, r.label)
    }
}
