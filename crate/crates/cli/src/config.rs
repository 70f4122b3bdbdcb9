//! Run configuration: command-line flags layered over an optional
//! `key = value` config file, layered over defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;

use kwexpand::tagset::SelectionStrategy;
use kwexpand::textprep::{
    LemmaTable, Normalizer, StopwordList, SuffixStemmer, TextPipeline, DEFAULT_MIN_STEM,
};

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct SharedArgs {
    /// Config file with `key = value` lines (flags take precedence)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Language tag recorded on stopword lists and normalizers
    #[arg(long, global = true)]
    pub language: Option<String>,

    /// Training split (JSONL)
    #[arg(long, global = true)]
    pub train: Option<PathBuf>,

    /// Test split (JSONL)
    #[arg(long, global = true)]
    pub test: Option<PathBuf>,

    /// Provided tagset file, one tag per line. Without it the tagset is
    /// constructed from the training gold keywords.
    #[arg(long, global = true)]
    pub tagset: Option<PathBuf>,

    /// Stopword file, one word per line
    #[arg(long, global = true)]
    pub stopwords: Option<PathBuf>,

    /// Lemma table, `surface<TAB>lemma` per line
    #[arg(long, global = true, conflicts_with = "suffixes")]
    pub lemmas: Option<PathBuf>,

    /// Suffix rules file, one suffix per line
    #[arg(long, global = true)]
    pub suffixes: Option<PathBuf>,

    /// Minimum stem length kept by the suffix stemmer
    #[arg(long, global = true)]
    pub min_stem: Option<usize>,

    /// Number of keywords to reach when expanding
    #[arg(long, global = true)]
    pub k: Option<usize>,

    /// Variant selection: min-length, max-length or random
    #[arg(long, global = true)]
    pub strategy: Option<String>,

    /// Seed for the random selection strategy
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output path
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Emit JSON only
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    language: Option<String>,
    train: Option<PathBuf>,
    test: Option<PathBuf>,
    tagset: Option<PathBuf>,
    stopwords: Option<PathBuf>,
    lemmas: Option<PathBuf>,
    suffixes: Option<PathBuf>,
    min_stem: Option<usize>,
    k: Option<usize>,
    strategy: Option<String>,
    seed: Option<u64>,
    cutoffs: Option<Vec<usize>>,
    #[serde(default)]
    predictions: BTreeMap<String, PathBuf>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub language: String,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub tagset: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub lemmas: Option<PathBuf>,
    pub suffixes: Option<PathBuf>,
    pub min_stem: usize,
    pub k: usize,
    pub strategy: SelectionStrategy,
    pub out: Option<PathBuf>,
    pub json: bool,
    pub cutoffs: Option<Vec<usize>>,
    /// Prediction files by component name, from the config file.
    pub predictions: BTreeMap<String, PathBuf>,
}

impl RunConfig {
    pub fn resolve(args: &SharedArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => load_file(path)?,
            None => FileConfig::default(),
        };
        let k = args.k.or(file.k).unwrap_or(kwexpand::extract::DEFAULT_K);
        if k == 0 {
            bail!("k must be at least 1");
        }
        let strategy_name = args
            .strategy
            .clone()
            .or(file.strategy)
            .unwrap_or_else(|| "min-length".to_string());
        let seed = args.seed.or(file.seed);
        let strategy = SelectionStrategy::parse(&strategy_name, seed)?;
        let lemmas = args.lemmas.clone().or(file.lemmas);
        let suffixes = args.suffixes.clone().or(file.suffixes);
        if lemmas.is_some() && suffixes.is_some() {
            bail!("choose either lemmas or suffixes, not both");
        }
        let config = RunConfig {
            language: args
                .language
                .clone()
                .or(file.language)
                .unwrap_or_else(|| "und".to_string()),
            train: args.train.clone().or(file.train),
            test: args.test.clone().or(file.test),
            tagset: args.tagset.clone().or(file.tagset),
            stopwords: args.stopwords.clone().or(file.stopwords),
            lemmas,
            suffixes,
            min_stem: args.min_stem.or(file.min_stem).unwrap_or(DEFAULT_MIN_STEM),
            k,
            strategy,
            out: args.out.clone(),
            json: args.json,
            cutoffs: file.cutoffs,
            predictions: file.predictions,
        };
        config.check_paths()?;
        Ok(config)
    }

    fn check_paths(&self) -> Result<()> {
        let inputs = [
            ("train", &self.train),
            ("test", &self.test),
            ("tagset", &self.tagset),
            ("stopwords", &self.stopwords),
            ("lemmas", &self.lemmas),
            ("suffixes", &self.suffixes),
        ];
        for (name, path) in inputs {
            if let Some(p) = path {
                if !p.exists() {
                    bail!("--{name}: {} does not exist", p.display());
                }
            }
        }
        Ok(())
    }

    pub fn pipeline(&self) -> Result<TextPipeline> {
        let stopwords = match &self.stopwords {
            Some(p) => StopwordList::load(&self.language, p)?,
            None => StopwordList::empty(&self.language),
        };
        let normalizer = match (&self.lemmas, &self.suffixes) {
            (Some(p), _) => Normalizer::lemma_table(&self.language, LemmaTable::load(p)?),
            (None, Some(p)) => {
                Normalizer::suffix_stemmer(&self.language, SuffixStemmer::load(p, self.min_stem)?)
            }
            (None, None) => Normalizer::identity(&self.language),
        };
        Ok(TextPipeline::new(stopwords, normalizer))
    }

    pub fn require<'a>(&self, name: &str, value: &'a Option<PathBuf>) -> Result<&'a Path> {
        value
            .as_deref()
            .with_context(|| format!("--{name} is required for this command"))
    }
}

fn load_file(path: &Path) -> Result<FileConfig> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut cfg: FileConfig =
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    // Relative paths in the file are relative to the file itself.
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    for p in [
        &mut cfg.train,
        &mut cfg.test,
        &mut cfg.tagset,
        &mut cfg.stopwords,
        &mut cfg.lemmas,
        &mut cfg.suffixes,
    ]
    .into_iter()
    .flatten()
    {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    for p in cfg.predictions.values_mut() {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(cfg)
}

/// Parse `name=path`.
pub fn parse_named_path(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => {
            Ok((name.to_string(), PathBuf::from(path)))
        }
        _ => Err(format!("expected NAME=PATH, got `{s}`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_and_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("run.toml");
        fs::write(dir.path().join("train.jsonl"), "").unwrap();
        fs::write(
            &cfg_path,
            "k = 7\nstrategy = \"max-length\"\ntrain = \"train.jsonl\"\n[predictions]\ntntkid = \"t.jsonl\"\n",
        )
        .unwrap();
        let args = SharedArgs {
            config: Some(cfg_path.clone()),
            k: Some(3),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&args).unwrap();
        assert_eq!(cfg.k, 3);
        assert_eq!(cfg.strategy, SelectionStrategy::MaxLength);
        assert_eq!(cfg.train.unwrap(), dir.path().join("train.jsonl"));
        assert_eq!(cfg.predictions["tntkid"], dir.path().join("t.jsonl"));

        let cfg = RunConfig::resolve(&SharedArgs::default()).unwrap();
        assert_eq!(cfg.k, 10);
        assert_eq!(cfg.strategy, SelectionStrategy::MinLength);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad_k = SharedArgs {
            k: Some(0),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&bad_k).is_err());
        let random_without_seed = SharedArgs {
            strategy: Some("random".into()),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&random_without_seed).is_err());
        let missing = SharedArgs {
            train: Some("/nonexistent/train.jsonl".into()),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&missing).is_err());

        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("run.toml");
        fs::write(&cfg_path, "unknown_key = 1\n").unwrap();
        let args = SharedArgs {
            config: Some(cfg_path),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&args).is_err());
    }

    #[test]
    fn named_paths() {
        assert_eq!(
            parse_named_path("bert=out/bert.jsonl").unwrap(),
            ("bert".to_string(), PathBuf::from("out/bert.jsonl"))
        );
        assert!(parse_named_path("bert").is_err());
        assert!(parse_named_path("=x").is_err());
    }
}
