//! Keyword extraction by TF-IDF tagset matching.
//!
//! The crate ranks the words of a news article with TF-IDF, keeps only those
//! whose normalized root belongs to a controlled tag vocabulary, and uses the
//! result to top up keyword lists produced by supervised extractors to a
//! constant length. It also carries the evaluation protocol: precision,
//! recall and F1 at fixed cutoffs against the gold keywords that actually
//! occur in the text.
//!
//! Modules, bottom-up:
//!
//! - [`textprep`]: lowercase, stopword filter, tokenize, normalize.
//! - [`corpus`]: JSONL document splits and dataset statistics.
//! - [`tagset`]: root-to-variants tag index with a variant selection strategy.
//! - [`tfidf`]: document-frequency index and candidate ranking.
//! - [`extract`]: extractors, list union, and expansion to `k` items.
//! - [`eval`]: P/R/F1@k with macro averaging and report rendering.

pub mod corpus;
pub mod eval;
pub mod extract;
pub mod tagset;
pub mod textprep;
pub mod tfidf;

use std::fs;
use std::io::Write;
use std::path::Path;

pub use corpus::{
    compute_stats, load_corpus, present_keywords, DatasetSplit, DatasetStats, Document, SplitName,
};
pub use eval::{doc_metrics, evaluate, EvalConfig, MethodRun, MetricsReport, Prf};
pub use extract::{
    expand_to_k, union, Extractor, FileBackedExtractor, KeywordItem, KeywordList, MethodSpec,
    PredictionFile, Resources, TfidfTmExtractor,
};
pub use tagset::{SelectionStrategy, TagsetIndex, TagsetSource};
pub use textprep::{Normalizer, StopwordList, TextPipeline, Token};
pub use tfidf::{rank_candidates, DfIndex, ScoredCandidate};

/// Write `bytes` to a sibling temp file, then rename it over `path`.
pub fn write_atomically(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}
