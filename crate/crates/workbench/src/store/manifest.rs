//! Dataset manifests.
//!
//! A manifest is a TOML document whose paths are relative to the manifest's
//! own directory:
//!
//! ```toml
//! id = "reference"
//! classes = ["bicycle", "sofa"]
//! presence = "presence.cmat"        # N×C
//! teacher_logits = "teacher.cmat"   # N×k
//! labels = "labels.cmat"            # N×k, entries 0 or 1
//!
//! [corpus]
//! names = "concepts.txt"            # C lines
//! vectors = "concepts.cmat"         # C×D
//!
//! [[images]]                        # row order of the N-row matrices
//! id = "img0000"
//! segments = "segments/img0000.cmat" # S×D
//!
//! [splits]
//! train = ["img0000"]
//! validation = []
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use conceptkd_core::Matrix;
use serde::{Deserialize, Serialize};

use super::matrix::{read_matrix, HEADER_LEN, MAGIC, VERSION};
use super::read_names;
use crate::error::{Result, StoreError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub id: String,
    pub classes: Vec<String>,
    pub corpus: CorpusFiles,
    pub presence: PathBuf,
    pub teacher_logits: PathBuf,
    pub labels: PathBuf,
    #[serde(default)]
    pub images: Vec<ImageEntry>,
    pub splits: Splits,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusFiles {
    pub names: PathBuf,
    pub vectors: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub id: String,
    pub segments: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Splits {
    #[serde(default)]
    pub train: Vec<String>,
    #[serde(default)]
    pub validation: Vec<String>,
}

impl Manifest {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
    let mut manifest: Manifest = toml::from_str(&text).map_err(|e| StoreError::Format {
        path: path.into(),
        detail: e.message().to_string(),
    })?;
    manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    MissingFile { role: String, path: PathBuf },
    Unreadable { role: String, path: PathBuf, detail: String },
    DimensionConflict { what: String, expected: usize, actual: usize },
    Duplicate { what: String, name: String },
    SplitOverlap { image: String },
    UnknownSplitImage { split: String, image: String },
    UnassignedImage { image: String },
    InvalidValue { what: String, detail: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingFile { role, path } => write!(f, "missing {role} file {}", path.display()),
            Violation::Unreadable { role, path, detail } => {
                write!(f, "unreadable {role} file {}: {detail}", path.display())
            }
            Violation::DimensionConflict { what, expected, actual } => {
                write!(f, "dimension conflict in {what}: expected {expected}, found {actual}")
            }
            Violation::Duplicate { what, name } => write!(f, "duplicate {what} '{name}'"),
            Violation::SplitOverlap { image } => write!(f, "image '{image}' is in both splits"),
            Violation::UnknownSplitImage { split, image } => {
                write!(f, "{split} split lists unknown image '{image}'")
            }
            Violation::UnassignedImage { image } => write!(f, "image '{image}' is in no split"),
            Violation::InvalidValue { what, detail } => write!(f, "invalid {what}: {detail}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "no violations");
        }
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "{} violation(s): {}", parts.len(), parts.join("; "))
    }
}

struct Checker<'a> {
    manifest: &'a Manifest,
    report: ValidationReport,
}

impl Checker<'_> {
    fn push(&mut self, v: Violation) {
        self.report.violations.push(v);
    }

    fn exists(&mut self, role: &str, rel: &Path) -> Option<PathBuf> {
        let path = self.manifest.resolve(rel);
        if path.is_file() {
            Some(path)
        } else {
            self.push(Violation::MissingFile { role: role.into(), path });
            None
        }
    }

    fn matrix(&mut self, role: &str, rel: &Path) -> Option<Matrix> {
        let path = self.exists(role, rel)?;
        match read_matrix(&path) {
            Ok(m) => Some(m),
            Err(e) => {
                self.push(Violation::Unreadable { role: role.into(), path, detail: e.to_string() });
                None
            }
        }
    }

    /// Shape of a matrix file from its header, after checking the file size.
    fn shape(&mut self, role: &str, rel: &Path) -> Option<(usize, usize)> {
        let path = self.exists(role, rel)?;
        match read_shape(&path) {
            Ok(s) => Some(s),
            Err(detail) => {
                self.push(Violation::Unreadable { role: role.into(), path, detail });
                None
            }
        }
    }

    fn dim(&mut self, what: String, expected: usize, actual: usize) {
        if expected != actual {
            self.push(Violation::DimensionConflict { what, expected, actual });
        }
    }

    fn duplicates<'n>(&mut self, what: &str, names: impl IntoIterator<Item = &'n String>) {
        let mut seen = BTreeSet::new();
        for name in names {
            if !seen.insert(name) {
                self.push(Violation::Duplicate { what: what.into(), name: name.clone() });
            }
        }
    }
}

fn read_shape(path: &Path) -> Result<(usize, usize), String> {
    let mut file = fs::File::open(path).map_err(|e| e.to_string())?;
    let len = file.metadata().map_err(|e| e.to_string())?.len();
    let mut header = [0u8; HEADER_LEN as usize];
    file.read_exact(&mut header).map_err(|_| format!("file has {len} bytes, shorter than the header"))?;
    if header[..4] != MAGIC {
        return Err("bad magic".into());
    }
    if u32::from_le_bytes(header[4..8].try_into().unwrap()) != VERSION {
        return Err("unsupported version".into());
    }
    let rows = u64::from_le_bytes(header[8..16].try_into().unwrap());
    let cols = u64::from_le_bytes(header[16..24].try_into().unwrap());
    let expected = rows.saturating_mul(cols).saturating_mul(4).saturating_add(HEADER_LEN);
    if expected != len {
        return Err(format!("truncated: header implies {expected} bytes, file has {len}"));
    }
    Ok((rows as usize, cols as usize))
}

/// Cross-checks every file and dimension the manifest names and returns all
/// violations found.
pub fn validate_manifest(manifest: &Manifest) -> ValidationReport {
    let mut ck = Checker { manifest, report: ValidationReport::default() };
    let k = manifest.classes.len();
    let n = manifest.images.len();
    if k == 0 {
        ck.push(Violation::InvalidValue { what: "classes".into(), detail: "no classes listed".into() });
    }
    if manifest.classes.iter().any(String::is_empty) {
        ck.push(Violation::InvalidValue { what: "classes".into(), detail: "empty class name".into() });
    }
    ck.duplicates("class", &manifest.classes);
    ck.duplicates("image id", manifest.images.iter().map(|i| &i.id));

    let names = ck.exists("concept names", &manifest.corpus.names).and_then(|p| match read_names(&p) {
        Ok(names) => Some(names),
        Err(e) => {
            ck.push(Violation::Unreadable { role: "concept names".into(), path: p, detail: e.to_string() });
            None
        }
    });
    if let Some(names) = &names {
        if names.iter().any(String::is_empty) {
            ck.push(Violation::InvalidValue { what: "concept names".into(), detail: "empty concept name".into() });
        }
        ck.duplicates("concept", names);
    }
    let c = names.as_ref().map(Vec::len);

    let vectors = ck.matrix("concept vectors", &manifest.corpus.vectors);
    let mut d = None;
    if let Some(v) = &vectors {
        d = Some(v.cols());
        if let Some(c) = c {
            ck.dim("concept vectors rows (C)".into(), c, v.rows());
        }
        if let Some(i) = v.iter_rows().position(|r| r.iter().all(|x| *x == 0.0)) {
            ck.push(Violation::InvalidValue { what: "concept vectors".into(), detail: format!("row {i} has zero norm") });
        }
    }
    let c = c.or(vectors.as_ref().map(Matrix::rows));

    for image in &manifest.images {
        let role = format!("segments of '{}'", image.id);
        if let Some((s, cols)) = ck.shape(&role, &image.segments) {
            if s == 0 {
                ck.push(Violation::InvalidValue { what: role.clone(), detail: "no segments".into() });
            }
            if let Some(d) = d {
                ck.dim(format!("{role} columns (D)"), d, cols);
            }
        }
    }

    if let Some(p) = ck.matrix("presence", &manifest.presence) {
        ck.dim("presence rows (N)".into(), n, p.rows());
        if let Some(c) = c {
            ck.dim("presence columns (C)".into(), c, p.cols());
        }
        if let Some(v) = p.as_slice().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            ck.push(Violation::InvalidValue { what: "presence".into(), detail: format!("value {v} outside [0, 1]") });
        }
    }
    if let Some(t) = ck.matrix("teacher logits", &manifest.teacher_logits) {
        ck.dim("teacher logit rows (N)".into(), n, t.rows());
        ck.dim("teacher logit columns (k)".into(), k, t.cols());
    }
    if let Some(l) = ck.matrix("labels", &manifest.labels) {
        ck.dim("label rows (N)".into(), n, l.rows());
        ck.dim("label columns (k)".into(), k, l.cols());
        if let Some(v) = l.as_slice().iter().find(|v| **v != 0.0 && **v != 1.0) {
            ck.push(Violation::InvalidValue { what: "labels".into(), detail: format!("value {v} is not 0 or 1") });
        }
    }

    let known: BTreeSet<&str> = manifest.images.iter().map(|i| i.id.as_str()).collect();
    let mut assigned: BTreeMap<&str, &str> = BTreeMap::new();
    for (split, ids) in [("train", &manifest.splits.train), ("validation", &manifest.splits.validation)] {
        for id in ids {
            if !known.contains(id.as_str()) {
                ck.push(Violation::UnknownSplitImage { split: split.into(), image: id.clone() });
                continue;
            }
            match assigned.insert(id, split) {
                Some(prev) if prev != split => ck.push(Violation::SplitOverlap { image: id.clone() }),
                Some(_) => ck.push(Violation::Duplicate { what: format!("{split} split entry"), name: id.clone() }),
                None => {}
            }
        }
    }
    for image in &manifest.images {
        if !assigned.contains_key(image.id.as_str()) {
            ck.push(Violation::UnassignedImage { image: image.id.clone() });
        }
    }
    ck.report
}
