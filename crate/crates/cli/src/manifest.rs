//! Patch manifests: `patch_path,label,slide_id,split` CSV files.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use drlbp_core::learn::Label;
use drlbp_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::synth::Split;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub patch_path: String,
    pub label: Label,
    pub slide_id: String,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    /// Directory that relative patch paths resolve against.
    pub root: PathBuf,
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    /// Reads and validates a manifest: patch files exist, no patch is listed
    /// in both splits, and no slide contributes to both splits.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let fail = |reason: String| Error::Manifest {
            path: path.into(),
            reason,
        };
        let mut reader = csv::Reader::from_path(path).map_err(|e| fail(e.to_string()))?;
        let headers = reader.headers().map_err(|e| fail(e.to_string()))?.clone();
        let expected = ["patch_path", "label", "slide_id", "split"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(fail(format!("header must be {}", expected.join(","))));
        }
        let mut rows = Vec::new();
        for (i, rec) in reader.deserialize::<ManifestRow>().enumerate() {
            rows.push(rec.map_err(|e| fail(format!("row {}: {e}", i + 1)))?);
        }
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let m = Self { root, rows };
        m.validate().map_err(|e| match e {
            Error::Manifest { reason, .. } => fail(reason),
            other => other,
        })?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| {
            Err(Error::Manifest {
                path: self.root.clone(),
                reason,
            })
        };
        if self.rows.is_empty() {
            return fail("manifest has no rows".into());
        }
        let mut patch_split: HashMap<&str, Split> = HashMap::new();
        let mut slide_split: HashMap<&str, Split> = HashMap::new();
        for row in &self.rows {
            if let Some(&s) = patch_split.get(row.patch_path.as_str()) {
                if s != row.split {
                    return fail(format!("patch {} appears in both splits", row.patch_path));
                }
            }
            patch_split.insert(&row.patch_path, row.split);
            if let Some(&s) = slide_split.get(row.slide_id.as_str()) {
                if s != row.split {
                    return fail(format!("slide {} straddles the train and test splits", row.slide_id));
                }
            }
            slide_split.insert(&row.slide_id, row.split);
            let p = self.resolve(row);
            if !p.is_file() {
                return fail(format!("patch file {} does not exist", p.display()));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, row: &ManifestRow) -> PathBuf {
        let p = Path::new(&row.patch_path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn split(&self, split: Split) -> Vec<&ManifestRow> {
        self.rows.iter().filter(|r| r.split == split).collect()
    }

    pub fn write(rows: &[ManifestRow], path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path.as_ref())?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: path.as_ref().into(),
            source: e,
        })
    }
}
