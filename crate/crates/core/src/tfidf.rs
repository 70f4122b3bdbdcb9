//! Document-frequency index and TF-IDF candidate ranking.
//!
//! Scores follow `tf * ln(|D| / df)` with a natural logarithm and no
//! smoothing. Terms missing from the index take `df = 1`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DatasetSplit;
use crate::tagset::TagsetIndex;
use crate::textprep::{TextPipeline, Token};

pub const DF_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TfidfError {
    #[error("cannot build a document-frequency index from an empty split")]
    EmptySplit,
    #[error("cannot read df index {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid df index snapshot: {0}")]
    Snapshot(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DfIndex {
    num_docs: usize,
    df: BTreeMap<String, usize>,
    built_from: String,
}

impl DfIndex {
    /// Count, for every normalized unigram, the number of documents of
    /// `split` containing it.
    pub fn build(split: &DatasetSplit, pipeline: &TextPipeline) -> Result<Self, TfidfError> {
        if split.is_empty() {
            return Err(TfidfError::EmptySplit);
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in split.documents() {
            let terms: HashSet<String> = pipeline
                .preprocess(doc)
                .into_iter()
                .map(|t| t.norm)
                .collect();
            for term in terms {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        Ok(DfIndex {
            num_docs: split.len(),
            df,
            built_from: split.name.to_string(),
        })
    }

    /// Assemble an index from raw counts, checking `1 <= df <= num_docs`.
    pub fn from_counts(
        num_docs: usize,
        df: impl IntoIterator<Item = (String, usize)>,
        built_from: impl Into<String>,
    ) -> Result<Self, TfidfError> {
        let df: BTreeMap<String, usize> = df.into_iter().collect();
        let index = DfIndex {
            num_docs,
            df,
            built_from: built_from.into(),
        };
        index.validate()?;
        Ok(index)
    }

    fn validate(&self) -> Result<(), TfidfError> {
        if self.num_docs == 0 {
            return Err(TfidfError::Snapshot("num_docs must be at least 1".into()));
        }
        if let Some((term, n)) = self.df.iter().find(|(_, &n)| n == 0 || n > self.num_docs) {
            return Err(TfidfError::Snapshot(format!(
                "df of `{term}` is {n}, outside 1..={}",
                self.num_docs
            )));
        }
        Ok(())
    }

    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    pub fn built_from(&self) -> &str {
        &self.built_from
    }

    pub fn df(&self, term: &str) -> Option<usize> {
        self.df.get(term).copied()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.df.len()
    }

    /// `tf * ln(|D| / df)`, unseen terms counted as `df = 1`.
    pub fn score(&self, term: &str, tf: usize) -> f64 {
        let df = self.df(term).unwrap_or(1);
        tf as f64 * (self.num_docs as f64 / df as f64).ln()
    }

    pub fn to_json(&self) -> String {
        let snap = DfSnapshot {
            format_version: DF_FORMAT_VERSION,
            num_docs: self.num_docs,
            built_from: self.built_from.clone(),
            df: self.df.clone(),
        };
        serde_json::to_string(&snap).expect("df snapshot serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, TfidfError> {
        let snap: DfSnapshot =
            serde_json::from_str(json).map_err(|e| TfidfError::Snapshot(e.to_string()))?;
        if snap.format_version != DF_FORMAT_VERSION {
            return Err(TfidfError::Snapshot(format!(
                "unsupported format_version {}",
                snap.format_version
            )));
        }
        Self::from_counts(snap.num_docs, snap.df, snap.built_from)
    }

    pub fn save_json(&self, path: &Path) -> std::io::Result<()> {
        crate::write_atomically(path, self.to_json().as_bytes())
    }

    pub fn load_json(path: &Path) -> Result<Self, TfidfError> {
        let text = fs::read_to_string(path).map_err(|source| TfidfError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct DfSnapshot {
    format_version: u32,
    num_docs: usize,
    built_from: String,
    df: BTreeMap<String, usize>,
}

/// A tagset-resident n-gram found in a document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredCandidate {
    pub root: Vec<String>,
    /// Occurrences of the full n-gram in the document.
    pub tf: usize,
    pub score: f64,
    pub first_pos: usize,
}

/// Descending score, then earlier first position, then lexicographic root.
pub fn candidate_order(a: &ScoredCandidate, b: &ScoredCandidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.first_pos.cmp(&b.first_pos))
        .then_with(|| a.root.cmp(&b.root))
}

/// Every contiguous normalized n-gram of the document (up to the tagset's
/// longest entry) whose root is in the tagset, scored and sorted.
///
/// Unigrams score with the plain formula. A multi-word candidate scores the
/// mean of its component unigrams' scores in this document.
pub fn rank_candidates(
    tokens: &[Token],
    index: &DfIndex,
    tagset: &TagsetIndex,
) -> Vec<ScoredCandidate> {
    let norms: Vec<&str> = tokens.iter().map(|t| t.norm.as_str()).collect();

    let mut unigram_tf: HashMap<&str, usize> = HashMap::new();
    for n in &norms {
        *unigram_tf.entry(n).or_insert(0) += 1;
    }

    // root -> (tf, first_pos)
    let mut found: HashMap<Vec<String>, (usize, usize)> = HashMap::new();
    let max_n = tagset.max_entry_len().min(norms.len());
    for n in 1..=max_n {
        for (start, window) in norms.windows(n).enumerate() {
            let root: Vec<String> = window.iter().map(|s| s.to_string()).collect();
            if !tagset.contains(&root) {
                continue;
            }
            let pos = tokens[start].position;
            found
                .entry(root)
                .and_modify(|(tf, first)| {
                    *tf += 1;
                    *first = (*first).min(pos);
                })
                .or_insert((1, pos));
        }
    }

    let mut out: Vec<ScoredCandidate> = found
        .into_iter()
        .map(|(root, (tf, first_pos))| {
            let score = if root.len() == 1 {
                index.score(&root[0], tf)
            } else {
                root.iter()
                    .map(|w| index.score(w, unigram_tf[w.as_str()]))
                    .sum::<f64>()
                    / root.len() as f64
            };
            ScoredCandidate {
                root,
                tf,
                score,
                first_pos,
            }
        })
        .collect();
    out.sort_by(candidate_order);
    out
}
