//! Text preprocessing: concatenate title and body, lowercase, drop stopwords,
//! tokenize, and reduce every token to a root form with a [`Normalizer`].
//!
//! Two normalizer back ends stand in for a full lemmatizer or stemmer:
//! a surface-to-lemma lookup table and a longest-suffix stripper driven by a
//! rules file. Both are loaded from plain UTF-8 files.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Document;

/// Default minimum stem length for the suffix stemmer, in characters.
pub const DEFAULT_MIN_STEM: usize = 3;

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error("cannot read {kind} file {path}: {source}")]
    Io {
        kind: &'static str,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: expected `surface<TAB>lemma`")]
    MalformedLemma { path: PathBuf, line: usize },
    #[error("lemma table has a cycle through `{0}`")]
    LemmaCycle(String),
    #[error("minimum stem length must be at least 1")]
    ZeroMinStem,
}

/// One token of a preprocessed stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// Lowercased surface form.
    pub surface: String,
    /// Normalized root.
    pub norm: String,
    /// Index in the post-filter stream.
    pub position: usize,
    /// Character offset of the token start in the concatenated text.
    pub char_offset: usize,
}

/// Lowercase a string with the per-character simple lowercase mapping.
///
/// Multi-character full mappings (U+0130) collapse to their first character,
/// so the output always has the same character count as the input.
pub fn simple_lowercase(s: &str) -> String {
    s.chars()
        .map(|c| c.to_lowercase().next().unwrap_or(c))
        .collect()
}

/// Split `text` into maximal runs of Unicode letters and digits.
///
/// Yields `(char_offset, slice)` pairs.
pub fn tokenize(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    for (char_idx, (byte_idx, c)) in text.char_indices().enumerate() {
        if c.is_alphanumeric() {
            if start.is_none() {
                start = Some((byte_idx, char_idx));
            }
        } else if let Some((b, ci)) = start.take() {
            out.push((ci, &text[b..byte_idx]));
        }
    }
    if let Some((b, ci)) = start {
        out.push((ci, &text[b..]));
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopwordList {
    pub language: String,
    words: HashSet<String>,
}

impl StopwordList {
    pub fn new<I, S>(language: impl Into<String>, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words = words
            .into_iter()
            .map(|w| simple_lowercase(w.as_ref().trim()))
            .filter(|w| !w.is_empty())
            .collect();
        StopwordList {
            language: language.into(),
            words,
        }
    }

    pub fn empty(language: impl Into<String>) -> Self {
        Self::new(language, std::iter::empty::<&str>())
    }

    /// Load a one-word-per-line stopword file. Blank lines are ignored.
    pub fn load(language: impl Into<String>, path: &Path) -> Result<Self, ResourceError> {
        let text = read_resource("stopword", path)?;
        Ok(Self::new(language, text.lines()))
    }

    pub fn contains(&self, lowercase_word: &str) -> bool {
        self.words.contains(lowercase_word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Surface-to-lemma lookup. Unknown surfaces map to themselves.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LemmaTable {
    map: HashMap<String, String>,
}

impl LemmaTable {
    /// Build a table from `(surface, lemma)` pairs.
    ///
    /// Chains (`a -> b`, `b -> c`) are resolved to their final lemma so the
    /// lookup is idempotent. Later pairs override earlier ones for the same
    /// surface.
    pub fn from_pairs<I, S, L>(pairs: I) -> Result<Self, ResourceError>
    where
        I: IntoIterator<Item = (S, L)>,
        S: AsRef<str>,
        L: AsRef<str>,
    {
        let mut raw: HashMap<String, String> = HashMap::new();
        for (s, l) in pairs {
            let s = simple_lowercase(s.as_ref().trim());
            let l = simple_lowercase(l.as_ref().trim());
            if s.is_empty() || l.is_empty() {
                continue;
            }
            raw.insert(s, l);
        }
        let mut map = HashMap::with_capacity(raw.len());
        for surface in raw.keys() {
            let mut current = surface.as_str();
            let mut steps = 0;
            while let Some(next) = raw.get(current) {
                if next == current {
                    break;
                }
                current = next;
                steps += 1;
                if steps > raw.len() {
                    return Err(ResourceError::LemmaCycle(surface.clone()));
                }
            }
            if current != surface {
                map.insert(surface.clone(), current.to_string());
            }
        }
        Ok(LemmaTable { map })
    }

    /// Load a `surface<TAB>lemma` file. Blank lines are ignored.
    pub fn load(path: &Path) -> Result<Self, ResourceError> {
        let text = read_resource("lemma", path)?;
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (s, l) = line.split_once('\t').ok_or(ResourceError::MalformedLemma {
                path: path.to_path_buf(),
                line: i + 1,
            })?;
            if s.trim().is_empty() || l.trim().is_empty() {
                return Err(ResourceError::MalformedLemma {
                    path: path.to_path_buf(),
                    line: i + 1,
                });
            }
            pairs.push((s.to_string(), l.to_string()));
        }
        Self::from_pairs(pairs)
    }

    pub fn lemma<'a>(&'a self, word: &'a str) -> &'a str {
        self.map.get(word).map(String::as_str).unwrap_or(word)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Longest-suffix stripper.
///
/// A suffix is removed only if at least `min_stem` characters remain. Stripping
/// repeats until no rule applies, which makes the stemmer idempotent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixStemmer {
    /// Sorted by descending character length, then lexicographically.
    suffixes: Vec<String>,
    min_stem: usize,
}

impl SuffixStemmer {
    pub fn new<I, S>(suffixes: I, min_stem: usize) -> Result<Self, ResourceError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if min_stem == 0 {
            return Err(ResourceError::ZeroMinStem);
        }
        let mut suffixes: Vec<String> = suffixes
            .into_iter()
            .map(|s| simple_lowercase(s.as_ref().trim()))
            .filter(|s| !s.is_empty())
            .collect();
        suffixes.sort_by(|a, b| {
            b.chars()
                .count()
                .cmp(&a.chars().count())
                .then_with(|| a.cmp(b))
        });
        suffixes.dedup();
        Ok(SuffixStemmer { suffixes, min_stem })
    }

    /// Load a one-suffix-per-line rules file.
    pub fn load(path: &Path, min_stem: usize) -> Result<Self, ResourceError> {
        let text = read_resource("suffix", path)?;
        Self::new(text.lines(), min_stem)
    }

    pub fn min_stem(&self) -> usize {
        self.min_stem
    }

    fn strip_once<'a>(&self, word: &'a str) -> Option<&'a str> {
        let len = word.chars().count();
        self.suffixes.iter().find_map(|suffix| {
            let slen = suffix.chars().count();
            if len >= slen + self.min_stem && word.ends_with(suffix.as_str()) {
                Some(&word[..word.len() - suffix.len()])
            } else {
                None
            }
        })
    }

    pub fn stem<'a>(&self, word: &'a str) -> &'a str {
        let mut current = word;
        while let Some(shorter) = self.strip_once(current) {
            current = shorter;
        }
        current
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NormalizerMode {
    Identity,
    SuffixStemmer(SuffixStemmer),
    LemmaTable(LemmaTable),
}

/// Maps a lowercase word to its root form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalizer {
    pub language: String,
    pub mode: NormalizerMode,
}

impl Normalizer {
    pub fn identity(language: impl Into<String>) -> Self {
        Normalizer {
            language: language.into(),
            mode: NormalizerMode::Identity,
        }
    }

    pub fn suffix_stemmer(language: impl Into<String>, stemmer: SuffixStemmer) -> Self {
        Normalizer {
            language: language.into(),
            mode: NormalizerMode::SuffixStemmer(stemmer),
        }
    }

    pub fn lemma_table(language: impl Into<String>, table: LemmaTable) -> Self {
        Normalizer {
            language: language.into(),
            mode: NormalizerMode::LemmaTable(table),
        }
    }

    pub fn mode_name(&self) -> &'static str {
        match self.mode {
            NormalizerMode::Identity => "identity",
            NormalizerMode::SuffixStemmer(_) => "suffix-stemmer",
            NormalizerMode::LemmaTable(_) => "lemma-table",
        }
    }

    pub fn normalize(&self, word: &str) -> String {
        match &self.mode {
            NormalizerMode::Identity => word.to_string(),
            NormalizerMode::SuffixStemmer(s) => s.stem(word).to_string(),
            NormalizerMode::LemmaTable(t) => t.lemma(word).to_string(),
        }
    }
}

/// The full preprocessing chain, bundling stopwords with a normalizer so
/// documents, tags and gold keywords all go through identical steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextPipeline {
    pub stopwords: StopwordList,
    pub normalizer: Normalizer,
}

impl TextPipeline {
    pub fn new(stopwords: StopwordList, normalizer: Normalizer) -> Self {
        TextPipeline {
            stopwords,
            normalizer,
        }
    }

    /// Identity normalizer and no stopwords.
    pub fn plain(language: &str) -> Self {
        TextPipeline::new(
            StopwordList::empty(language),
            Normalizer::identity(language),
        )
    }

    /// Title and body joined by a newline.
    pub fn concatenate(doc: &Document) -> String {
        let mut text = String::with_capacity(doc.title.len() + doc.body.len() + 1);
        text.push_str(&doc.title);
        text.push('\n');
        text.push_str(&doc.body);
        text
    }

    pub fn preprocess(&self, doc: &Document) -> Vec<Token> {
        self.process_text(&Self::concatenate(doc))
    }

    /// Run the chain over arbitrary text.
    pub fn process_text(&self, text: &str) -> Vec<Token> {
        let lowered = simple_lowercase(text);
        let mut tokens = Vec::new();
        for (char_offset, surface) in tokenize(&lowered) {
            if self.stopwords.contains(surface) {
                continue;
            }
            let norm = self.normalizer.normalize(surface);
            tokens.push(Token {
                surface: surface.to_string(),
                norm,
                position: tokens.len(),
                char_offset,
            });
        }
        tokens
    }

    /// Normalized token sequence of a free-standing phrase (a tag or a gold
    /// keyword).
    pub fn normalize_phrase(&self, phrase: &str) -> Vec<String> {
        self.process_text(phrase)
            .into_iter()
            .map(|t| t.norm)
            .collect()
    }
}

/// Raw token count before stopword removal.
pub fn raw_token_count(text: &str) -> usize {
    tokenize(text).len()
}

fn read_resource(kind: &'static str, path: &Path) -> Result<String, ResourceError> {
    fs::read_to_string(path).map_err(|source| ResourceError::Io {
        kind,
        path: path.to_path_buf(),
        source,
    })
}
