use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::json;

use kwexpand::corpus::{compute_stats, load_corpus, render_stats_table, DatasetSplit, SplitName};
use kwexpand::eval::{evaluate as run_evaluation, EvalConfig, MethodRun};
use kwexpand::extract::{
    write_keyword_lists, KeywordList, MethodSpec, PredictionFile, Resources, TfidfTmExtractor,
};
use kwexpand::tagset::TagsetIndex;
use kwexpand::textprep::TextPipeline;
use kwexpand::tfidf::DfIndex;
use kwexpand::write_atomically;

use crate::config::RunConfig;

pub const DF_SNAPSHOT: &str = "df_index.json";
pub const TAGSET_SNAPSHOT: &str = "tagset.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Finished, but data-quality warnings exceeded their threshold.
    Warnings,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_atomically(path, text.as_bytes())
            .with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn tagset_for(
    cfg: &RunConfig,
    pipeline: &TextPipeline,
    train: Option<&DatasetSplit>,
) -> Result<TagsetIndex> {
    match (&cfg.tagset, train) {
        (Some(path), _) => Ok(TagsetIndex::load_provided(path, pipeline, cfg.strategy)?),
        (None, Some(train)) => Ok(TagsetIndex::construct_from_train(
            train,
            pipeline,
            cfg.strategy,
        )?),
        (None, None) => bail!("a tagset needs --tagset or --train to construct one from"),
    }
}

pub fn stats(cfg: &RunConfig) -> Result<Status> {
    let pipeline = cfg.pipeline()?;
    let mut splits = Vec::new();
    if let Some(p) = &cfg.train {
        splits.push(load_corpus(p, SplitName::Train)?);
    }
    if let Some(p) = &cfg.test {
        splits.push(load_corpus(p, SplitName::Test)?);
    }
    if splits.is_empty() {
        bail!("stats needs --train and/or --test");
    }

    let rows: Vec<(String, _)> = splits
        .iter()
        .map(|s| (s.name.to_string(), compute_stats(s, &pipeline)))
        .collect();
    let mut json_obj = serde_json::Map::new();
    for (name, s) in &rows {
        json_obj.insert(name.clone(), serde_json::to_value(s)?);
    }

    let train = splits.iter().find(|s| s.name == SplitName::Train);
    let tagset = if cfg.tagset.is_some() || train.is_some_and(|t| !t.is_empty()) {
        Some(tagset_for(cfg, &pipeline, train)?)
    } else {
        None
    };
    if let Some(t) = &tagset {
        json_obj.insert(
            "tagset".into(),
            json!({
                "source": t.source.to_string(),
                "unique_tags": t.num_variants(),
                "roots": t.len(),
                "dropped": t.dropped(),
            }),
        );
    }

    let json = serde_json::to_string_pretty(&json_obj)? + "\n";
    let text = if cfg.json {
        json
    } else {
        let labelled: Vec<(&str, _)> = rows.iter().map(|(n, s)| (n.as_str(), *s)).collect();
        let mut text = render_stats_table(&labelled);
        if let Some(t) = &tagset {
            text.push_str(&format!(
                "\nTagset ({}): {} unique tags under {} roots\n",
                t.source,
                t.num_variants(),
                t.len()
            ));
        }
        text.push('\n');
        text.push_str(&json);
        text
    };
    emit(cfg.out.as_deref(), &text)?;

    if splits.iter().any(DatasetSplit::is_empty) {
        eprintln!("warning: empty split; statistics are zero");
        return Ok(Status::Warnings);
    }
    Ok(Status::Ok)
}

pub fn build(cfg: &RunConfig) -> Result<Status> {
    let train_path = cfg.require("train", &cfg.train)?;
    let out_dir = cfg.require("out", &cfg.out)?;
    let pipeline = cfg.pipeline()?;
    let train = load_corpus(train_path, SplitName::Train)?;
    let df = DfIndex::build(&train, &pipeline)?;
    let tagset = tagset_for(cfg, &pipeline, Some(&train))?;

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    df.save_json(&out_dir.join(DF_SNAPSHOT))?;
    tagset.save_json(&out_dir.join(TAGSET_SNAPSHOT))?;
    println!(
        "df index: {} documents, {} terms; tagset ({}): {} roots, {} unique tags, {} dropped",
        df.num_docs(),
        df.vocabulary_size(),
        tagset.source,
        tagset.len(),
        tagset.num_variants(),
        tagset.dropped()
    );
    Ok(Status::Ok)
}

pub fn extract(
    cfg: &RunConfig,
    method: &str,
    pred_flags: &[(String, PathBuf)],
    df_from: Option<&Path>,
    index_dir: Option<&Path>,
) -> Result<Status> {
    let spec = MethodSpec::parse(method)?;
    let pipeline = cfg.pipeline()?;
    let test = load_corpus(cfg.require("test", &cfg.test)?, SplitName::Test)?;

    let mut pred_paths: BTreeMap<String, PathBuf> = cfg.predictions.clone();
    pred_paths.extend(pred_flags.iter().cloned());

    let mut resources = Resources::default();
    for name in &spec.neural {
        let path = pred_paths.get(name).with_context(|| {
            format!("no prediction file for component `{name}` (pass --pred {name}=PATH)")
        })?;
        let preds = PredictionFile::load(path)?;
        resources.add_predictions(name, preds, pipeline.clone());
    }
    if spec.tfidf {
        let (df, tagset) = match index_dir {
            Some(dir) => (
                DfIndex::load_json(&dir.join(DF_SNAPSHOT))?,
                TagsetIndex::load_json(&dir.join(TAGSET_SNAPSHOT))?.with_strategy(cfg.strategy),
            ),
            None => {
                let df_path = match df_from {
                    Some(p) => p,
                    None => cfg.require("train (or --df-from)", &cfg.train)?,
                };
                let df_split = load_corpus(df_path, SplitName::Train)?;
                let df = DfIndex::build(&df_split, &pipeline)?;
                let train = match &cfg.train {
                    Some(p) if cfg.tagset.is_none() => Some(load_corpus(p, SplitName::Train)?),
                    _ => None,
                };
                (df, tagset_for(cfg, &pipeline, train.as_ref())?)
            }
        };
        resources.tfidf = Some(TfidfTmExtractor::new(pipeline.clone(), df, tagset, cfg.k));
    }

    let runner = resources.runner(&spec, cfg.k)?;
    let lists = runner.run_all(test.documents());
    let mut buf = Vec::new();
    write_keyword_lists(&mut buf, &lists)?;
    emit(cfg.out.as_deref(), std::str::from_utf8(&buf)?)?;

    for (name, ex) in &resources.extractors {
        let missing = ex.missing_count();
        if missing > 0 {
            eprintln!("warning: {name}: {missing} test documents have no predictions");
        }
    }
    Ok(Status::Ok)
}

fn load_run(
    path: &Path,
    test: &DatasetSplit,
    pipeline: &TextPipeline,
    name: &str,
) -> Result<HashMap<String, KeywordList>> {
    let preds = PredictionFile::load(path)?;
    let mut out = HashMap::new();
    for doc in test.documents() {
        if let Some(kws) = preds.get(&doc.id) {
            let mut list = KeywordList::new(&doc.id);
            for kw in kws {
                list.push_raw(kw, name, None, pipeline);
            }
            out.insert(doc.id.clone(), list);
        }
    }
    Ok(out)
}

pub fn evaluate(
    cfg: &RunConfig,
    runs: &[(String, PathBuf)],
    cutoffs: Option<Vec<usize>>,
    per_doc: bool,
    max_missing: usize,
) -> Result<Status> {
    let pipeline = cfg.pipeline()?;
    let cutoffs = cutoffs
        .or_else(|| cfg.cutoffs.clone())
        .unwrap_or_else(|| vec![5, 10]);
    let config = EvalConfig::new(cutoffs, true)?;
    if per_doc && cfg.out.is_none() {
        bail!("--per-doc needs --out");
    }
    let test = load_corpus(cfg.require("test", &cfg.test)?, SplitName::Test)?;
    let loaded: Vec<(String, HashMap<String, KeywordList>)> = runs
        .iter()
        .map(|(name, path)| Ok((name.clone(), load_run(path, &test, &pipeline, name)?)))
        .collect::<Result<_>>()?;
    let method_runs: Vec<MethodRun<'_>> = loaded
        .iter()
        .map(|(name, preds)| MethodRun {
            method: name,
            predictions: preds,
        })
        .collect();
    let report = run_evaluation(&method_runs, &test, &pipeline, &config)?;

    let table = report.render_table();
    let json = report.to_json() + "\n";
    match &cfg.out {
        Some(prefix) => {
            let with_ext = |ext: &str| {
                let mut p = prefix.clone().into_os_string();
                p.push(ext);
                PathBuf::from(p)
            };
            let mut csv = Vec::new();
            if per_doc {
                report.write_per_doc_csv(&mut csv)?;
            }
            write_atomically(&with_ext(".txt"), table.as_bytes())?;
            write_atomically(&with_ext(".json"), json.as_bytes())?;
            if per_doc {
                write_atomically(&with_ext(".csv"), &csv)?;
            }
            print!("{}", if cfg.json { &json } else { &table });
        }
        None => print!("{}", if cfg.json { &json } else { &table }),
    }

    let mut status = Status::Ok;
    for m in &report.methods {
        eprintln!(
            "{}: {} evaluated, {} skipped (no present gold), {} missing predictions",
            m.method, m.evaluated, m.skipped_empty_gold, m.missing_predictions
        );
        if m.missing_predictions > max_missing {
            eprintln!(
                "warning: {}: {} missing predictions exceed --max-missing {}",
                m.method, m.missing_predictions, max_missing
            );
            status = Status::Warnings;
        }
    }
    Ok(status)
}
