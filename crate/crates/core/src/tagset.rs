//! Controlled tag vocabulary indexed by normalized root sequence.
//!
//! Tags in an editor-maintained vocabulary are often inflected variants of
//! the same root. The index groups them under their normalized form and picks
//! one display variant per root with a [`SelectionStrategy`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DatasetSplit;
use crate::textprep::TextPipeline;

pub const TAGSET_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TagsetError {
    #[error("tagset is empty after normalization ({dropped} tags dropped)")]
    Empty { dropped: usize },
    #[error("cannot read tagset file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid tagset snapshot: {0}")]
    Snapshot(String),
    #[error("unknown selection strategy `{0}` (expected min-length, max-length or random)")]
    UnknownStrategy(String),
    #[error("unknown tagset source `{0}` (expected provided or constructed)")]
    UnknownSource(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagsetSource {
    /// Maintained by editors and shipped as a file.
    Provided,
    /// Derived from the gold keywords of a training split.
    Constructed,
}

impl fmt::Display for TagsetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TagsetSource::Provided => "provided",
            TagsetSource::Constructed => "constructed",
        })
    }
}

impl FromStr for TagsetSource {
    type Err = TagsetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "provided" => Ok(TagsetSource::Provided),
            "constructed" => Ok(TagsetSource::Constructed),
            other => Err(TagsetError::UnknownSource(other.to_string())),
        }
    }
}

/// How to pick a display tag when several variants share a root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SelectionStrategy {
    #[default]
    MinLength,
    MaxLength,
    Random {
        seed: u64,
    },
}

impl SelectionStrategy {
    /// Parse `min-length`, `max-length` or `random`. The random strategy
    /// needs an explicit seed.
    pub fn parse(name: &str, seed: Option<u64>) -> Result<Self, TagsetError> {
        match (name, seed) {
            ("min-length", _) => Ok(SelectionStrategy::MinLength),
            ("max-length", _) => Ok(SelectionStrategy::MaxLength),
            ("random", Some(seed)) => Ok(SelectionStrategy::Random { seed }),
            ("random", None) => Err(TagsetError::UnknownStrategy(
                "random (requires a seed)".into(),
            )),
            (other, _) => Err(TagsetError::UnknownStrategy(other.to_string())),
        }
    }
}

impl fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionStrategy::MinLength => f.write_str("min-length"),
            SelectionStrategy::MaxLength => f.write_str("max-length"),
            SelectionStrategy::Random { seed } => write!(f, "random(seed={seed})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagsetIndex {
    pub source: TagsetSource,
    pub strategy: SelectionStrategy,
    /// Variants are kept sorted by code point, which makes the index
    /// independent of input order.
    entries: BTreeMap<Vec<String>, Vec<String>>,
    max_entry_len: usize,
    dropped: usize,
}

impl TagsetIndex {
    /// Normalize every tag and group variants under their root sequence.
    /// Tags that normalize to nothing (pure stopwords, punctuation) are
    /// dropped and counted.
    pub fn build<I, S>(
        tags: I,
        pipeline: &TextPipeline,
        strategy: SelectionStrategy,
        source: TagsetSource,
    ) -> Result<Self, TagsetError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut grouped: BTreeMap<Vec<String>, BTreeSet<String>> = BTreeMap::new();
        let mut dropped = 0;
        for tag in tags {
            let tag = tag.as_ref().trim();
            if tag.is_empty() {
                continue;
            }
            let root = pipeline.normalize_phrase(tag);
            if root.is_empty() {
                dropped += 1;
                continue;
            }
            grouped.entry(root).or_default().insert(tag.to_string());
        }
        if grouped.is_empty() {
            return Err(TagsetError::Empty { dropped });
        }
        let max_entry_len = grouped.keys().map(Vec::len).max().unwrap_or(0);
        Ok(TagsetIndex {
            source,
            strategy,
            entries: grouped
                .into_iter()
                .map(|(k, v)| (k, v.into_iter().collect()))
                .collect(),
            max_entry_len,
            dropped,
        })
    }

    /// Read a one-tag-per-line file as a provided tagset.
    pub fn load_provided(
        path: &Path,
        pipeline: &TextPipeline,
        strategy: SelectionStrategy,
    ) -> Result<Self, TagsetError> {
        let text = fs::read_to_string(path).map_err(|source| TagsetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::build(text.lines(), pipeline, strategy, TagsetSource::Provided)
    }

    /// The tag universe is the union of all gold keywords in `split`.
    pub fn construct_from_train(
        split: &DatasetSplit,
        pipeline: &TextPipeline,
        strategy: SelectionStrategy,
    ) -> Result<Self, TagsetError> {
        let tags = split
            .documents()
            .iter()
            .flat_map(|d| d.keywords.iter().map(String::as_str));
        Self::build(tags, pipeline, strategy, TagsetSource::Constructed)
    }

    pub fn with_strategy(mut self, strategy: SelectionStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of distinct raw tags across all entries.
    pub fn num_variants(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// Longest root sequence in the index, in tokens.
    pub fn max_entry_len(&self) -> usize {
        self.max_entry_len
    }

    pub fn contains(&self, root: &[String]) -> bool {
        self.entries.contains_key(root)
    }

    pub fn variants(&self, root: &[String]) -> Option<&[String]> {
        self.entries.get(root).map(Vec::as_slice)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[String], &[String])> {
        self.entries
            .iter()
            .map(|(k, v)| (k.as_slice(), v.as_slice()))
    }

    /// Display tag for `root`, or `None` when the root is not indexed.
    pub fn select_variant(&self, root: &[String]) -> Option<&str> {
        let variants = self.entries.get(root)?;
        let chosen = match self.strategy {
            // Variants are sorted, so the first minimum is the
            // lexicographically smallest among the shortest.
            SelectionStrategy::MinLength => variants.iter().min_by_key(|v| v.chars().count()),
            SelectionStrategy::MaxLength => variants.iter().rev().max_by_key(|v| v.chars().count()),
            SelectionStrategy::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ root_hash(root));
                variants.get(rng.gen_range(0..variants.len()))
            }
        };
        chosen.map(String::as_str)
    }

    pub fn save_json(&self, path: &Path) -> std::io::Result<()> {
        crate::write_atomically(path, self.to_json().as_bytes())
    }

    pub fn to_json(&self) -> String {
        let snapshot = TagsetSnapshot {
            format_version: TAGSET_FORMAT_VERSION,
            source: self.source,
            strategy: self.strategy,
            dropped: self.dropped,
            entries: self
                .entries
                .iter()
                .map(|(root, variants)| SnapshotEntry {
                    root: root.clone(),
                    variants: variants.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&snapshot).expect("tagset snapshot serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, TagsetError> {
        let snap: TagsetSnapshot =
            serde_json::from_str(json).map_err(|e| TagsetError::Snapshot(e.to_string()))?;
        if snap.format_version != TAGSET_FORMAT_VERSION {
            return Err(TagsetError::Snapshot(format!(
                "unsupported format_version {}",
                snap.format_version
            )));
        }
        let mut entries = BTreeMap::new();
        for e in snap.entries {
            if e.root.is_empty() || e.variants.is_empty() {
                return Err(TagsetError::Snapshot("empty root or variant list".into()));
            }
            let variants: BTreeSet<String> = e.variants.into_iter().collect();
            if entries
                .insert(e.root, variants.into_iter().collect::<Vec<_>>())
                .is_some()
            {
                return Err(TagsetError::Snapshot("duplicate root".into()));
            }
        }
        if entries.is_empty() {
            return Err(TagsetError::Empty {
                dropped: snap.dropped,
            });
        }
        let max_entry_len = entries.keys().map(Vec::len).max().unwrap_or(0);
        Ok(TagsetIndex {
            source: snap.source,
            strategy: snap.strategy,
            entries,
            max_entry_len,
            dropped: snap.dropped,
        })
    }

    pub fn load_json(path: &Path) -> Result<Self, TagsetError> {
        let text = fs::read_to_string(path).map_err(|source| TagsetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct TagsetSnapshot {
    format_version: u32,
    source: TagsetSource,
    strategy: SelectionStrategy,
    dropped: usize,
    entries: Vec<SnapshotEntry>,
}

#[derive(Serialize, Deserialize)]
struct SnapshotEntry {
    root: Vec<String>,
    variants: Vec<String>,
}

// FNV-1a over the joined root; stable across platforms and releases.
fn root_hash(root: &[String]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for (i, part) in root.iter().enumerate() {
        if i > 0 {
            h ^= 0x1f;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        for b in part.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}
