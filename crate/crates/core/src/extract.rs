//! Extractors and the combinators that merge their outputs.
//!
//! Supervised extractors are consumed as precomputed prediction files. The
//! TF-IDF(tm) extractor ranks tagset-resident n-grams. Lists are merged with
//! [`union`] and topped up to a constant size with [`expand_to_k`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Document;
use crate::tagset::TagsetIndex;
use crate::textprep::TextPipeline;
use crate::tfidf::{rank_candidates, DfIndex};

/// Name of the TF-IDF tagset-matching component in method specs.
pub const TFIDF_TM: &str = "tfidf-tm";

/// Target list length used when none is configured.
pub const DEFAULT_K: usize = 10;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("cannot combine keyword lists of different documents (`{0}` vs `{1}`)")]
    DocMismatch(String, String),
    #[error("cannot open prediction file {path}: {source}")]
    Open {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid method spec `{spec}`: {reason}")]
    BadMethod { spec: String, reason: String },
    #[error("no prediction file loaded for component `{0}`")]
    MissingPredictions(String),
    #[error("method `{0}` needs TF-IDF resources (df index and tagset)")]
    MissingTfidf(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordItem {
    pub keyword: String,
    pub norm: Vec<String>,
    pub source: String,
    pub score: Option<f64>,
}

/// Ranked keywords for one document with pairwise-distinct norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordList {
    pub doc_id: String,
    items: Vec<KeywordItem>,
}

impl KeywordList {
    pub fn new(doc_id: impl Into<String>) -> Self {
        KeywordList {
            doc_id: doc_id.into(),
            items: Vec::new(),
        }
    }

    /// Append an item unless its norm is empty or already present.
    pub fn push(&mut self, item: KeywordItem) -> bool {
        if item.norm.is_empty() || self.contains_norm(&item.norm) {
            return false;
        }
        self.items.push(item);
        true
    }

    /// Normalize `keyword` with `pipeline` and append it.
    pub fn push_raw(
        &mut self,
        keyword: &str,
        source: &str,
        score: Option<f64>,
        pipeline: &TextPipeline,
    ) -> bool {
        let keyword = keyword.trim();
        self.push(KeywordItem {
            keyword: keyword.to_string(),
            norm: pipeline.normalize_phrase(keyword),
            source: source.to_string(),
            score,
        })
    }

    pub fn contains_norm(&self, norm: &[String]) -> bool {
        self.items.iter().any(|i| i.norm == norm)
    }

    pub fn items(&self) -> &[KeywordItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn truncate(&mut self, len: usize) {
        self.items.truncate(len);
    }

    pub fn norms(&self) -> impl Iterator<Item = &[String]> {
        self.items.iter().map(|i| i.norm.as_slice())
    }
}

/// Anything that turns a document into a ranked keyword list.
pub trait Extractor: Send + Sync {
    fn name(&self) -> &str;
    fn extract(&self, doc: &Document) -> KeywordList;
}

/// Precomputed output of a supervised extractor: doc id to ranked raw
/// keywords.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PredictionFile {
    entries: HashMap<String, Vec<String>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawKeyword {
    Plain(String),
    Scored { kw: String },
}

#[derive(Deserialize)]
struct RawPrediction {
    id: String,
    keywords: Vec<RawKeyword>,
}

impl PredictionFile {
    pub fn from_entries<I, K>(entries: I) -> Self
    where
        I: IntoIterator<Item = (K, Vec<String>)>,
        K: Into<String>,
    {
        PredictionFile {
            entries: entries.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    /// Parse line-delimited `{"id": ..., "keywords": [...]}` records.
    /// Keywords may be plain strings or `{"kw": ...}` objects, so extraction
    /// output files can be read back as predictions.
    pub fn read<R: Read>(reader: R, path: &Path) -> Result<Self, ExtractError> {
        let mut entries = HashMap::new();
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let malformed = |message: String| ExtractError::Malformed {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let line = line.map_err(|e| malformed(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawPrediction =
                serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
            let kws = raw
                .keywords
                .into_iter()
                .map(|k| match k {
                    RawKeyword::Plain(s) | RawKeyword::Scored { kw: s } => s,
                })
                .collect();
            if entries.insert(raw.id.clone(), kws).is_some() {
                return Err(malformed(format!("duplicate id `{}`", raw.id)));
            }
        }
        Ok(PredictionFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self, ExtractError> {
        let file = File::open(path).map_err(|source| ExtractError::Open {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read(file, path)
    }

    pub fn get(&self, doc_id: &str) -> Option<&[String]> {
        self.entries.get(doc_id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Serves a [`PredictionFile`] through the [`Extractor`] interface.
#[derive(Debug)]
pub struct FileBackedExtractor {
    name: String,
    predictions: PredictionFile,
    pipeline: TextPipeline,
    missing: AtomicUsize,
}

impl FileBackedExtractor {
    pub fn new(
        name: impl Into<String>,
        predictions: PredictionFile,
        pipeline: TextPipeline,
    ) -> Self {
        FileBackedExtractor {
            name: name.into(),
            predictions,
            pipeline,
            missing: AtomicUsize::new(0),
        }
    }

    /// Documents requested so far that had no entry in the file.
    pub fn missing_count(&self) -> usize {
        self.missing.load(Ordering::Relaxed)
    }
}

impl Extractor for FileBackedExtractor {
    fn name(&self) -> &str {
        &self.name
    }

    fn extract(&self, doc: &Document) -> KeywordList {
        let mut list = KeywordList::new(&doc.id);
        match self.predictions.get(&doc.id) {
            Some(kws) => {
                for kw in kws {
                    list.push_raw(kw, &self.name, None, &self.pipeline);
                }
            }
            None => {
                self.missing.fetch_add(1, Ordering::Relaxed);
                log::debug!("{}: no predictions for document `{}`", self.name, doc.id);
            }
        }
        list
    }
}

/// Top TF-IDF(tm) candidates rendered as display tags.
#[derive(Debug, Clone)]
pub struct TfidfTmExtractor {
    pub pipeline: TextPipeline,
    pub df: DfIndex,
    pub tagset: TagsetIndex,
    pub limit: usize,
}

impl TfidfTmExtractor {
    pub fn new(pipeline: TextPipeline, df: DfIndex, tagset: TagsetIndex, limit: usize) -> Self {
        TfidfTmExtractor {
            pipeline,
            df,
            tagset,
            limit,
        }
    }

    /// All tagset candidates of `doc` in rank order, as keyword items.
    fn ranked_items(&self, doc: &Document) -> impl Iterator<Item = KeywordItem> + '_ {
        let tokens = self.pipeline.preprocess(doc);
        rank_candidates(&tokens, &self.df, &self.tagset)
            .into_iter()
            .filter_map(move |c| {
                let keyword = self.tagset.select_variant(&c.root)?.to_string();
                Some(KeywordItem {
                    keyword,
                    norm: c.root,
                    source: TFIDF_TM.to_string(),
                    score: Some(c.score),
                })
            })
    }
}

impl Extractor for TfidfTmExtractor {
    fn name(&self) -> &str {
        TFIDF_TM
    }

    fn extract(&self, doc: &Document) -> KeywordList {
        let mut list = KeywordList::new(&doc.id);
        for item in self.ranked_items(doc) {
            if list.len() >= self.limit {
                break;
            }
            list.push(item);
        }
        list
    }
}

/// All of `a`, then the items of `b` whose norm is not yet present.
pub fn union(a: &KeywordList, b: &KeywordList) -> Result<KeywordList, ExtractError> {
    if a.doc_id != b.doc_id {
        return Err(ExtractError::DocMismatch(
            a.doc_id.clone(),
            b.doc_id.clone(),
        ));
    }
    let mut out = a.clone();
    for item in b.items() {
        out.push(item.clone());
    }
    Ok(out)
}

/// Top up `base` to `k` items with TF-IDF(tm) candidates it does not already
/// contain. Lists already at or above `k` are returned unchanged.
pub fn expand_to_k(
    base: &KeywordList,
    doc: &Document,
    tfidf: &TfidfTmExtractor,
    k: usize,
) -> KeywordList {
    let mut out = base.clone();
    if out.len() >= k {
        return out;
    }
    for item in tfidf.ranked_items(doc) {
        if out.len() >= k {
            break;
        }
        out.push(item);
    }
    out
}

/// A combination of extractors: file-backed components merged left to
/// right, optionally followed by TF-IDF(tm) expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodSpec {
    pub neural: Vec<String>,
    pub tfidf: bool,
}

impl MethodSpec {
    /// Components joined by `&`, e.g. `tntkid&bert&tfidf-tm`.
    pub fn parse(spec: &str) -> Result<Self, ExtractError> {
        let bad = |reason: &str| ExtractError::BadMethod {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let parts: Vec<&str> = spec.split('&').map(str::trim).collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(bad("empty component"));
        }
        let mut neural = Vec::new();
        let mut tfidf = false;
        let mut seen = HashSet::new();
        for (i, part) in parts.iter().enumerate() {
            if !seen.insert(*part) {
                return Err(bad("component listed twice"));
            }
            if *part == TFIDF_TM {
                if i + 1 != parts.len() {
                    return Err(bad("tfidf-tm must be the last component"));
                }
                tfidf = true;
            } else {
                neural.push(part.to_string());
            }
        }
        Ok(MethodSpec { neural, tfidf })
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<&str> = self.neural.iter().map(String::as_str).collect();
        if self.tfidf {
            parts.push(TFIDF_TM);
        }
        f.write_str(&parts.join("&"))
    }
}

impl FromStr for MethodSpec {
    type Err = ExtractError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MethodSpec::parse(s)
    }
}

/// A method spec bound to its loaded resources.
pub struct MethodRunner<'a> {
    spec: MethodSpec,
    neural: Vec<&'a FileBackedExtractor>,
    tfidf: Option<&'a TfidfTmExtractor>,
    k: usize,
}

/// Resources a method may draw on.
#[derive(Default)]
pub struct Resources {
    pub extractors: BTreeMap<String, FileBackedExtractor>,
    pub tfidf: Option<TfidfTmExtractor>,
}

impl Resources {
    pub fn add_predictions(
        &mut self,
        name: &str,
        predictions: PredictionFile,
        pipeline: TextPipeline,
    ) {
        self.extractors.insert(
            name.to_string(),
            FileBackedExtractor::new(name, predictions, pipeline),
        );
    }

    /// Resolve every component of `spec`, failing on the first missing one.
    pub fn runner(&self, spec: &MethodSpec, k: usize) -> Result<MethodRunner<'_>, ExtractError> {
        let neural = spec
            .neural
            .iter()
            .map(|name| {
                self.extractors
                    .get(name)
                    .ok_or_else(|| ExtractError::MissingPredictions(name.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let tfidf = if spec.tfidf {
            Some(
                self.tfidf
                    .as_ref()
                    .ok_or_else(|| ExtractError::MissingTfidf(spec.to_string()))?,
            )
        } else {
            None
        };
        Ok(MethodRunner {
            spec: spec.clone(),
            neural,
            tfidf,
            k: k.max(1),
        })
    }
}

impl MethodRunner<'_> {
    pub fn spec(&self) -> &MethodSpec {
        &self.spec
    }

    /// Union the file-backed components in order, then expand with TF-IDF(tm)
    /// when the spec includes it. A lone `tfidf-tm` returns its top `k`.
    pub fn run(&self, doc: &Document) -> KeywordList {
        let mut merged: Option<KeywordList> = None;
        for ex in &self.neural {
            let next = ex.extract(doc);
            merged = Some(match merged {
                None => next,
                Some(acc) => union(&acc, &next).expect("same document"),
            });
        }
        match (merged, self.tfidf) {
            (Some(base), Some(tfidf)) => expand_to_k(&base, doc, tfidf, self.k),
            (Some(base), None) => base,
            (None, Some(tfidf)) => expand_to_k(&KeywordList::new(&doc.id), doc, tfidf, self.k),
            (None, None) => KeywordList::new(&doc.id),
        }
    }

    /// Run over many documents in parallel. The result is sorted by doc id.
    pub fn run_all(&self, docs: &[Document]) -> Vec<KeywordList> {
        let mut out: Vec<KeywordList> = docs.par_iter().map(|d| self.run(d)).collect();
        out.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        out
    }
}

#[derive(Serialize)]
struct OutputKeyword<'a> {
    kw: &'a str,
    source: &'a str,
    score: Option<f64>,
}

#[derive(Serialize)]
struct OutputRecord<'a> {
    id: &'a str,
    keywords: Vec<OutputKeyword<'a>>,
}

/// Write `{"id", "keywords": [{"kw", "source", "score"}]}` lines.
pub fn write_keyword_lists<W: Write>(mut w: W, lists: &[KeywordList]) -> std::io::Result<()> {
    for list in lists {
        let record = OutputRecord {
            id: &list.doc_id,
            keywords: list
                .items()
                .iter()
                .map(|i| OutputKeyword {
                    kw: &i.keyword,
                    source: &i.source,
                    score: i.score,
                })
                .collect(),
        };
        serde_json::to_writer(&mut w, &record)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
