//! Shared run-manifest, report-table and hashing helpers.
//!
//! Manifests are flat key-value text (`key<TAB>value` per line) so every
//! reported number can be traced back to the exact config and seeds that
//! produced it.

use sha2::{Digest, Sha256};
use std::path::Path;

use crate::dataset::InteractionDataset;
use crate::error::{Error, Result};

/// Ordered key-value record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvRecord {
    pairs: Vec<(String, String)>,
}

impl KvRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.pairs.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str, path: &Path) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Artifact {
            path: path.to_path_buf(),
            message: format!("missing key {key:?}"),
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (k, v) in &self.pairs {
            out.push_str(k);
            out.push('\t');
            out.push_str(v);
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<KvRecord> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut rec = KvRecord::new();
        for line in text.lines() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once('\t').or_else(|| line.split_once('=')) {
                Some((k, v)) => {
                    rec.push(k.trim(), v.trim());
                }
                None => {
                    return Err(Error::Artifact {
                        path: path.to_path_buf(),
                        message: format!("not a key-value line: {line:?}"),
                    })
                }
            }
        }
        Ok(rec)
    }
}

/// Content hash of a dataset: users, items and every (user, item,
/// timestamp) triple in index order.
pub fn dataset_hash(ds: &InteractionDataset) -> String {
    let mut h = Sha256::new();
    h.update(ds.n_users().to_le_bytes());
    h.update(ds.n_items().to_le_bytes());
    for u in 0..ds.n_users() as u32 {
        for p in ds.positives(u) {
            h.update(u.to_le_bytes());
            h.update(p.item.to_le_bytes());
            h.update(p.timestamp.to_le_bytes());
        }
    }
    hex(&h.finalize())
}

pub fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut h = Sha256::new();
    h.update(&bytes);
    Ok(hex(&h.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Plain-text aligned table for human-readable reports.
#[derive(Debug, Clone)]
pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table {
            headers: headers.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) -> &mut Self {
        debug_assert_eq!(cells.len(), self.headers.len());
        self.rows.push(cells);
        self
    }

    pub fn render(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(String::len).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let fmt_row = |cells: &[String]| -> String {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        out.push_str(&fmt_row(&self.headers));
        out.push('\n');
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&fmt_row(row));
            out.push('\n');
        }
        out
    }
}
