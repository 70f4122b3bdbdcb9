//! Document collections, train/test splits, and per-split dataset statistics.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textprep::{raw_token_count, TextPipeline};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot open corpus {path}: {source}")]
    Open {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("read error at line {line}: {source}")]
    Read {
        line: usize,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: record has an empty id")]
    EmptyId { line: usize },
    #[error("line {line}: duplicate document id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: keyword entry is empty")]
    EmptyKeyword { line: usize },
    #[error("unknown split name `{0}` (expected `train` or `test`)")]
    UnknownSplit(String),
}

/// One news article with its gold keywords.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub body: String,
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Test,
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitName::Train => "train",
            SplitName::Test => "test",
        })
    }
}

impl FromStr for SplitName {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(SplitName::Train),
            "test" => Ok(SplitName::Test),
            other => Err(CorpusError::UnknownSplit(other.to_string())),
        }
    }
}

/// An ordered, id-unique collection of documents. Immutable once loaded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub name: SplitName,
    documents: Vec<Document>,
}

impl DatasetSplit {
    /// Build a split from in-memory documents, enforcing the same invariants
    /// as the loader. Errors carry 1-based positions in place of line numbers.
    pub fn new(name: SplitName, documents: Vec<Document>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        let mut checked = Vec::with_capacity(documents.len());
        for (i, doc) in documents.into_iter().enumerate() {
            checked.push(check_document(doc, i + 1, &mut seen)?);
        }
        Ok(DatasetSplit {
            name,
            documents: checked,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    title: String,
    body: String,
    keywords: Vec<String>,
}

fn check_document(
    mut doc: Document,
    line: usize,
    seen: &mut HashSet<String>,
) -> Result<Document, CorpusError> {
    if doc.id.trim().is_empty() {
        return Err(CorpusError::EmptyId { line });
    }
    for kw in &mut doc.keywords {
        let trimmed = kw.trim();
        if trimmed.is_empty() {
            return Err(CorpusError::EmptyKeyword { line });
        }
        if trimmed.len() != kw.len() {
            *kw = trimmed.to_string();
        }
    }
    if !seen.insert(doc.id.clone()) {
        return Err(CorpusError::DuplicateId { line, id: doc.id });
    }
    Ok(doc)
}

/// Read a line-delimited JSON corpus. Blank lines are skipped; every other
/// line must be an object with `id`, `title`, `body` and `keywords`.
pub fn read_corpus<R: Read>(reader: R, name: SplitName) -> Result<DatasetSplit, CorpusError> {
    let mut seen = HashSet::new();
    let mut documents = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| CorpusError::Read {
            line: line_no,
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        let doc = Document {
            id: raw.id,
            title: raw.title,
            body: raw.body,
            keywords: raw.keywords,
        };
        documents.push(check_document(doc, line_no, &mut seen)?);
    }
    Ok(DatasetSplit { name, documents })
}

pub fn load_corpus(path: &Path, name: SplitName) -> Result<DatasetSplit, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    read_corpus(file, name)
}

/// Gold keywords whose normalized token sequence occurs contiguously in the
/// normalized title + body. Order follows the gold list; duplicates on the
/// normalized form are collapsed to their first occurrence.
pub fn present_keywords(doc: &Document, pipeline: &TextPipeline) -> Vec<String> {
    let norms: Vec<String> = pipeline
        .preprocess(doc)
        .into_iter()
        .map(|t| t.norm)
        .collect();
    let mut seen: HashSet<Vec<String>> = HashSet::new();
    let mut out = Vec::new();
    for kw in &doc.keywords {
        let phrase = pipeline.normalize_phrase(kw);
        if phrase.is_empty() || seen.contains(&phrase) {
            continue;
        }
        if contains_sequence(&norms, &phrase) {
            seen.insert(phrase);
            out.push(kw.clone());
        }
    }
    out
}

fn contains_sequence(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Summary statistics of one split, in the layout of a dataset table row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total_docs: usize,
    pub avg_doc_len: f64,
    pub avg_kw: f64,
    pub pct_present_kw: f64,
    pub avg_present_kw: f64,
}

/// Additive counts behind [`DatasetStats`]; totals of two splits can be
/// merged before averaging.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsTotals {
    pub docs: usize,
    pub tokens: usize,
    pub keywords: usize,
    pub present: usize,
}

impl StatsTotals {
    pub fn from_split(split: &DatasetSplit, pipeline: &TextPipeline) -> Self {
        let mut totals = StatsTotals::default();
        for doc in split.documents() {
            totals.docs += 1;
            totals.tokens += raw_token_count(&TextPipeline::concatenate(doc));
            totals.keywords += doc.keywords.len();
            totals.present += present_keywords(doc, pipeline).len();
        }
        totals
    }

    pub fn merge(self, other: StatsTotals) -> StatsTotals {
        StatsTotals {
            docs: self.docs + other.docs,
            tokens: self.tokens + other.tokens,
            keywords: self.keywords + other.keywords,
            present: self.present + other.present,
        }
    }

    pub fn stats(&self) -> DatasetStats {
        let per_doc = |n: usize| {
            if self.docs == 0 {
                0.0
            } else {
                n as f64 / self.docs as f64
            }
        };
        DatasetStats {
            total_docs: self.docs,
            avg_doc_len: per_doc(self.tokens),
            avg_kw: per_doc(self.keywords),
            pct_present_kw: if self.keywords == 0 {
                0.0
            } else {
                self.present as f64 / self.keywords as f64
            },
            avg_present_kw: per_doc(self.present),
        }
    }
}

pub fn compute_stats(split: &DatasetSplit, pipeline: &TextPipeline) -> DatasetStats {
    StatsTotals::from_split(split, pipeline).stats()
}

pub const STATS_COLUMNS: [&str; 5] = [
    "Total docs",
    "doc len.",
    "kw.",
    "% present kw.",
    "present kw.",
];

/// Render labelled stats rows as an aligned text table.
pub fn render_stats_table(rows: &[(&str, DatasetStats)]) -> String {
    let label_width = rows
        .iter()
        .map(|(l, _)| l.chars().count())
        .chain(std::iter::once("Split".len()))
        .max()
        .unwrap_or(5);
    let mut out = format!("{:<label_width$}", "Split");
    for col in STATS_COLUMNS {
        out.push_str(&format!(" | {col:>13}"));
    }
    out.push('\n');
    out.push_str(&"-".repeat(label_width + STATS_COLUMNS.len() * 16));
    out.push('\n');
    for (label, s) in rows {
        out.push_str(&format!(
            "{label:<label_width$} | {:>13} | {:>13.2} | {:>13.2} | {:>13.2} | {:>13.2}\n",
            s.total_docs, s.avg_doc_len, s.avg_kw, s.pct_present_kw, s.avg_present_kw
        ));
    }
    out
}
