//! Provenance block embedded in every output document.

use std::collections::BTreeMap;
use std::path::Path;

use drlbp_core::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub tool: String,
    pub config: RunConfig,
    /// Input name to SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
}

impl Audit {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            tool: concat!("drlbp ", env!("CARGO_PKG_VERSION")).to_string(),
            config: config.clone(),
            inputs: BTreeMap::new(),
        }
    }

    pub fn hash_file(&mut self, name: impl Into<String>, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        })?;
        self.inputs.insert(name.into(), hex::encode(Sha256::digest(&bytes)));
        Ok(())
    }

    /// One digest over many files, in the given order.
    pub fn hash_files<'a>(&mut self, name: impl Into<String>, paths: impl IntoIterator<Item = &'a Path>) -> Result<()> {
        let mut h = Sha256::new();
        for p in paths {
            let bytes = std::fs::read(p).map_err(|e| Error::Io {
                path: p.into(),
                source: e,
            })?;
            h.update(Sha256::digest(&bytes));
        }
        self.inputs.insert(name.into(), hex::encode(h.finalize()));
        Ok(())
    }
}

/// Writes `{ "audit": .., <key>: value }` as pretty JSON.
pub fn write_document<T: Serialize>(path: &Path, audit: &Audit, key: &str, value: &T) -> Result<()> {
    let mut doc = serde_json::Map::new();
    doc.insert("audit".into(), serde_json::to_value(audit)?);
    doc.insert(key.into(), serde_json::to_value(value)?);
    let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(doc))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

/// Reads the `key` section of a document written by [`write_document`].
pub fn read_document<T: DeserializeOwned>(path: &Path, key: &str) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    let mut doc: serde_json::Value = serde_json::from_str(&text)?;
    let section = doc
        .get_mut(key)
        .map(serde_json::Value::take)
        .ok_or_else(|| Error::Dataset(format!("{}: missing \"{key}\" section", path.display())))?;
    Ok(serde_json::from_value(section)?)
}
