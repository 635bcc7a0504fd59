//! Question benchmarks and the bundled cybersecurity interview corpus.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const BENCHMARK_FORMAT_VERSION: u32 = 1;

const DEFAULT_CORPUS: &str = include_str!("../data/cybersecurity_40.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    /// A question with a well-known factual answer.
    Informational,
    /// A scenario asking what the reader should do.
    Situational,
}

impl QuestionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QuestionKind::Informational => "informational",
            QuestionKind::Situational => "situational",
        }
    }
}

impl fmt::Display for QuestionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuestionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "informational" => Ok(QuestionKind::Informational),
            "situational" => Ok(QuestionKind::Situational),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub kind: QuestionKind,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Benchmark {
    pub name: String,
    pub questions: Vec<Question>,
}

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("cannot read benchmark {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("benchmark is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported benchmark format version {found} (expected {BENCHMARK_FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("question {index}: duplicate id {id:?}")]
    DuplicateId { index: usize, id: String },
    #[error("question {index}: unknown kind {value:?}")]
    UnknownKind { index: usize, value: String },
    #[error("question {index}: empty text")]
    EmptyText { index: usize },
    #[error("question {index}: empty id")]
    EmptyId { index: usize },
}

#[derive(Serialize, Deserialize)]
struct BenchmarkDocument {
    format_version: u32,
    name: String,
    questions: Vec<RawQuestion>,
}

#[derive(Serialize, Deserialize)]
struct RawQuestion {
    id: String,
    kind: String,
    text: String,
}

impl Benchmark {
    /// The 40-question cybersecurity interview set (33 informational, 7 situational).
    pub fn default_corpus() -> Benchmark {
        Benchmark::from_json(DEFAULT_CORPUS).expect("bundled corpus is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Benchmark, BenchmarkError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| BenchmarkError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Benchmark::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Benchmark, BenchmarkError> {
        let doc: BenchmarkDocument = serde_json::from_str(text)?;
        if doc.format_version != BENCHMARK_FORMAT_VERSION {
            return Err(BenchmarkError::UnsupportedVersion {
                found: doc.format_version,
            });
        }
        let mut seen = HashSet::new();
        let mut questions = Vec::with_capacity(doc.questions.len());
        for (index, raw) in doc.questions.into_iter().enumerate() {
            if raw.id.is_empty() {
                return Err(BenchmarkError::EmptyId { index });
            }
            if !seen.insert(raw.id.clone()) {
                return Err(BenchmarkError::DuplicateId { index, id: raw.id });
            }
            let kind = raw
                .kind
                .parse()
                .map_err(|value| BenchmarkError::UnknownKind { index, value })?;
            if raw.text.trim().is_empty() {
                return Err(BenchmarkError::EmptyText { index });
            }
            questions.push(Question {
                id: raw.id,
                kind,
                text: raw.text,
            });
        }
        Ok(Benchmark {
            name: doc.name,
            questions,
        })
    }

    pub fn to_json(&self) -> String {
        let doc = BenchmarkDocument {
            format_version: BENCHMARK_FORMAT_VERSION,
            name: self.name.clone(),
            questions: self
                .questions
                .iter()
                .map(|q| RawQuestion {
                    id: q.id.clone(),
                    kind: q.kind.as_str().to_string(),
                    text: q.text.clone(),
                })
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("benchmark serializes");
        out.push('\n');
        out
    }

    pub fn filter_by_kind(&self, kind: QuestionKind) -> Benchmark {
        Benchmark {
            name: self.name.clone(),
            questions: self
                .questions
                .iter()
                .filter(|q| q.kind == kind)
                .cloned()
                .collect(),
        }
    }

    pub fn question(&self, id: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }
}
