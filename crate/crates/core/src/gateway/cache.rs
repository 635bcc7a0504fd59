//! Append-only JSON-lines journal of [`ResponseRecord`]s.
//!
//! Line 1 is a header object carrying the format version; every following
//! line is one record. Damaged lines are reported by line number and
//! skipped, the rest of the journal stays readable.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ResponseRecord;

pub const CACHE_FORMAT_VERSION: u32 = 1;
const CACHE_FORMAT_NAME: &str = "llm-audit-response-cache";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheKey {
    pub provider_id: String,
    pub prompt_hash: String,
    pub repetition_index: u32,
}

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cache {path}: line 1 is not a valid header: {reason}")]
    BadHeader { path: PathBuf, reason: String },
    #[error("cache {path}: unsupported format version {found}")]
    UnsupportedVersion { path: PathBuf, found: u32 },
}

/// A journal line that could not be used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheProblem {
    pub line: usize,
    pub reason: String,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    format_version: u32,
}

struct Inner {
    records: Vec<ResponseRecord>,
    index: HashMap<CacheKey, usize>,
    writer: Option<BufWriter<File>>,
}

/// Shared handle to a response journal; clones refer to the same journal.
#[derive(Clone)]
pub struct ResponseCache {
    path: Option<PathBuf>,
    inner: Arc<Mutex<Inner>>,
    problems: Arc<Vec<CacheProblem>>,
}

impl std::fmt::Debug for ResponseCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ResponseCache")
            .field("path", &self.path)
            .field("records", &self.len())
            .finish()
    }
}

impl ResponseCache {
    /// A cache that lives only in memory.
    pub fn in_memory() -> Self {
        ResponseCache {
            path: None,
            inner: Arc::new(Mutex::new(Inner {
                records: Vec::new(),
                index: HashMap::new(),
                writer: None,
            })),
            problems: Arc::new(Vec::new()),
        }
    }

    /// Opens (creating if absent) the journal at `path` for reading and appending.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, CacheError> {
        let path = path.as_ref().to_path_buf();
        let io = |source| CacheError::Io {
            path: path.clone(),
            source,
        };

        let mut records = Vec::new();
        let mut index = HashMap::new();
        let mut problems = Vec::new();
        let mut needs_header = true;
        let mut torn_tail = false;

        if path.exists() {
            let text = fs::read_to_string(&path).map_err(io)?;
            torn_tail = !text.is_empty() && !text.ends_with('\n');
            for (n, line) in text.lines().enumerate() {
                let line_no = n + 1;
                if line_no == 1 {
                    if line.trim().is_empty() {
                        continue;
                    }
                    check_header(&path, &line)?;
                    needs_header = false;
                    continue;
                }
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<ResponseRecord>(&line) {
                    Ok(record) => {
                        let key = record.key();
                        if index.contains_key(&key) {
                            problems.push(CacheProblem {
                                line: line_no,
                                reason: format!("duplicate key {key:?}"),
                            });
                        } else {
                            index.insert(key, records.len());
                            records.push(record);
                        }
                    }
                    Err(e) => problems.push(CacheProblem {
                        line: line_no,
                        reason: e.to_string(),
                    }),
                }
            }
        }

        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io)?;
        let mut writer = BufWriter::new(file);
        if torn_tail {
            // An interrupted write left a partial line; start appends on a fresh one.
            writeln!(writer).map_err(io)?;
        }
        if needs_header {
            if !records.is_empty() || !problems.is_empty() {
                return Err(CacheError::BadHeader {
                    path,
                    reason: "missing".into(),
                });
            }
            let header = Header {
                format: CACHE_FORMAT_NAME.into(),
                format_version: CACHE_FORMAT_VERSION,
            };
            let line = serde_json::to_string(&header).expect("header serializes");
            writeln!(writer, "{line}").map_err(io)?;
            writer.flush().map_err(io)?;
        }

        Ok(ResponseCache {
            path: Some(path),
            inner: Arc::new(Mutex::new(Inner {
                records,
                index,
                writer: Some(writer),
            })),
            problems: Arc::new(problems),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Lines skipped while opening.
    pub fn problems(&self) -> &[CacheProblem] {
        &self.problems
    }

    pub fn get(&self, key: &CacheKey) -> Option<ResponseRecord> {
        let inner = self.lock();
        inner.index.get(key).map(|&i| inner.records[i].clone())
    }

    /// Appends a record; a key that is already present is left untouched.
    pub fn append(&self, record: ResponseRecord) -> Result<(), CacheError> {
        let mut inner = self.lock();
        let key = record.key();
        if inner.index.contains_key(&key) {
            return Ok(());
        }
        if let Some(writer) = inner.writer.as_mut() {
            let line = serde_json::to_string(&record).expect("record serializes");
            writeln!(writer, "{line}").map_err(|source| CacheError::Io {
                path: self.path.clone().unwrap_or_default(),
                source,
            })?;
        }
        let at = inner.records.len();
        inner.index.insert(key, at);
        inner.records.push(record);
        Ok(())
    }

    /// Makes every appended record durable.
    pub fn flush(&self) -> Result<(), CacheError> {
        let mut inner = self.lock();
        if let Some(writer) = inner.writer.as_mut() {
            let io = |source| CacheError::Io {
                path: self.path.clone().unwrap_or_default(),
                source,
            };
            writer.flush().map_err(io)?;
            writer.get_ref().sync_data().map_err(io)?;
        }
        Ok(())
    }

    /// Snapshot of all records in journal order.
    pub fn records(&self) -> Vec<ResponseRecord> {
        self.lock().records.clone()
    }

    pub fn len(&self) -> usize {
        self.lock().records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }
}

fn check_header(path: &Path, line: &str) -> Result<(), CacheError> {
    let header: Header = serde_json::from_str(line).map_err(|e| CacheError::BadHeader {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    if header.format != CACHE_FORMAT_NAME {
        return Err(CacheError::BadHeader {
            path: path.to_path_buf(),
            reason: format!("unexpected format {:?}", header.format),
        });
    }
    if header.format_version != CACHE_FORMAT_VERSION {
        return Err(CacheError::UnsupportedVersion {
            path: path.to_path_buf(),
            found: header.format_version,
        });
    }
    Ok(())
}
