//! Precision, recall and F1 at fixed cutoffs against present gold keywords.
//!
//! Both sides are normalized with the same [`TextPipeline`] before matching;
//! a prediction matches a gold keyword only if their full normalized token
//! sequences are equal. Scores are macro-averaged over documents.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{present_keywords, DatasetSplit, Document};
use crate::extract::KeywordList;
use crate::textprep::TextPipeline;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cutoffs must be positive, sorted and distinct: {0:?}")]
    BadCutoffs(Vec<usize>),
    #[error("no documents to evaluate ({skipped} skipped for empty present gold)")]
    NothingToEvaluate { skipped: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// A set of normalized gold keywords.
pub type GoldSet = BTreeSet<Vec<String>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalConfig {
    cutoffs: Vec<usize>,
    pub skip_empty_gold: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            cutoffs: vec![5, 10],
            skip_empty_gold: true,
        }
    }
}

impl EvalConfig {
    pub fn new(cutoffs: Vec<usize>, skip_empty_gold: bool) -> Result<Self, EvalError> {
        let valid =
            !cutoffs.is_empty() && cutoffs[0] > 0 && cutoffs.windows(2).all(|w| w[0] < w[1]);
        if !valid {
            return Err(EvalError::BadCutoffs(cutoffs));
        }
        Ok(EvalConfig {
            cutoffs,
            skip_empty_gold,
        })
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub const ZERO: Prf = Prf {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };

    pub fn from_counts(matches: usize, predicted: usize, gold: usize) -> Prf {
        let precision = if predicted == 0 {
            0.0
        } else {
            matches as f64 / predicted as f64
        };
        let recall = if gold == 0 {
            0.0
        } else {
            matches as f64 / gold as f64
        };
        Prf {
            precision,
            recall,
            f1: harmonic_mean(precision, recall),
        }
    }
}

pub fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Scores of the first `min(k, |predicted|)` predictions. Precision divides
/// by the number of predictions actually considered, not by `k`.
pub fn doc_metrics(predicted: &KeywordList, gold: &GoldSet, k: usize) -> Prf {
    let considered = predicted.len().min(k);
    let matches = predicted
        .norms()
        .take(considered)
        .filter(|n| gold.contains(*n))
        .count();
    Prf::from_counts(matches, considered, gold.len())
}

/// Normalized present gold keywords of `doc`.
pub fn gold_set(doc: &Document, pipeline: &TextPipeline) -> GoldSet {
    present_keywords(doc, pipeline)
        .iter()
        .map(|k| pipeline.normalize_phrase(k))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffScores {
    pub k: usize,
    #[serde(flatten)]
    pub scores: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocScores {
    pub doc_id: String,
    pub cutoffs: Vec<CutoffScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    /// Macro averages, one per cutoff.
    pub scores: Vec<CutoffScores>,
    /// Sorted by doc id.
    pub per_doc: Vec<DocScores>,
    pub evaluated: usize,
    pub skipped_empty_gold: usize,
    pub missing_predictions: usize,
}

impl MethodReport {
    pub fn at(&self, k: usize) -> Option<Prf> {
        self.scores.iter().find(|c| c.k == k).map(|c| c.scores)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub cutoffs: Vec<usize>,
    pub methods: Vec<MethodReport>,
}

/// One method's output: its name and a prediction per doc id.
pub struct MethodRun<'a> {
    pub method: &'a str,
    pub predictions: &'a HashMap<String, KeywordList>,
}

/// Evaluate each run over `split`. Documents are visited in id order, so
/// macro scores do not depend on the order of the split.
pub fn evaluate(
    runs: &[MethodRun<'_>],
    split: &DatasetSplit,
    pipeline: &TextPipeline,
    config: &EvalConfig,
) -> Result<MetricsReport, EvalError> {
    let mut docs: Vec<&Document> = split.documents().iter().collect();
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    let golds: Vec<GoldSet> = docs.iter().map(|d| gold_set(d, pipeline)).collect();

    let mut methods = Vec::with_capacity(runs.len());
    for run in runs {
        let mut per_doc = Vec::new();
        let mut skipped = 0;
        let mut missing = 0;
        for (doc, gold) in docs.iter().zip(&golds) {
            if gold.is_empty() && config.skip_empty_gold {
                skipped += 1;
                continue;
            }
            let empty;
            let predicted = match run.predictions.get(&doc.id) {
                Some(p) => p,
                None => {
                    missing += 1;
                    empty = KeywordList::new(&doc.id);
                    &empty
                }
            };
            per_doc.push(DocScores {
                doc_id: doc.id.clone(),
                cutoffs: config
                    .cutoffs
                    .iter()
                    .map(|&k| CutoffScores {
                        k,
                        scores: doc_metrics(predicted, gold, k),
                    })
                    .collect(),
            });
        }
        if per_doc.is_empty() {
            return Err(EvalError::NothingToEvaluate { skipped });
        }
        let n = per_doc.len() as f64;
        let scores = config
            .cutoffs
            .iter()
            .enumerate()
            .map(|(ci, &k)| {
                let mut sum = Prf::ZERO;
                for d in &per_doc {
                    let s = d.cutoffs[ci].scores;
                    sum.precision += s.precision;
                    sum.recall += s.recall;
                    sum.f1 += s.f1;
                }
                CutoffScores {
                    k,
                    scores: Prf {
                        precision: sum.precision / n,
                        recall: sum.recall / n,
                        f1: sum.f1 / n,
                    },
                }
            })
            .collect();
        methods.push(MethodReport {
            method: run.method.to_string(),
            scores,
            evaluated: per_doc.len(),
            per_doc,
            skipped_empty_gold: skipped,
            missing_predictions: missing,
        });
    }
    Ok(MetricsReport {
        cutoffs: config.cutoffs.clone(),
        methods,
    })
}

impl MetricsReport {
    pub fn method(&self, name: &str) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == name)
    }

    /// Rows are methods; columns are P, R, F1 for each cutoff in turn.
    pub fn render_table(&self) -> String {
        let width = self
            .methods
            .iter()
            .map(|m| m.method.chars().count())
            .chain(std::iter::once("Model".len()))
            .max()
            .unwrap_or(5);
        let mut out = format!("{:<width$}", "Model");
        for k in &self.cutoffs {
            for metric in ["P", "R", "F1"] {
                out.push_str(&format!(" | {:>7}", format!("{metric}@{k}")));
            }
        }
        out.push('\n');
        out.push_str(&"-".repeat(width + self.cutoffs.len() * 30));
        out.push('\n');
        for m in &self.methods {
            out.push_str(&format!("{:<width$}", m.method));
            for c in &m.scores {
                out.push_str(&format!(
                    " | {:>7.4} | {:>7.4} | {:>7.4}",
                    c.scores.precision, c.scores.recall, c.scores.f1
                ));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-document rows: `doc_id,method,k,P,R,F1`.
    pub fn write_per_doc_csv<W: Write>(&self, w: W) -> Result<(), EvalError> {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["doc_id", "method", "k", "P", "R", "F1"])?;
        for m in &self.methods {
            for d in &m.per_doc {
                for c in &d.cutoffs {
                    csv.write_record([
                        d.doc_id.clone(),
                        m.method.clone(),
                        c.k.to_string(),
                        c.scores.precision.to_string(),
                        c.scores.recall.to_string(),
                        c.scores.f1.to_string(),
                    ])?;
                }
            }
        }
        csv.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SplitName;
    use crate::extract::KeywordItem;
    use proptest::prelude::*;

    fn kl(id: &str, norms: &[&str]) -> KeywordList {
        let mut l = KeywordList::new(id);
        for n in norms {
            l.push(KeywordItem {
                keyword: n.to_string(),
                norm: n.split(' ').map(str::to_string).collect(),
                source: "t".into(),
                score: None,
            });
        }
        l
    }

    fn gold(items: &[&str]) -> GoldSet {
        items
            .iter()
            .map(|s| s.split(' ').map(str::to_string).collect())
            .collect()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn doc_metrics_examples() {
        let m = doc_metrics(&kl("d", &["a", "d", "b"]), &gold(&["a", "b", "c"]), 5);
        assert!(
            close(m.precision, 2.0 / 3.0) && close(m.recall, 2.0 / 3.0) && close(m.f1, 2.0 / 3.0)
        );

        let m = doc_metrics(&kl("d", &["a", "b"]), &gold(&["a", "b"]), 10);
        assert_eq!(
            m,
            Prf {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0
            }
        );

        assert_eq!(doc_metrics(&kl("d", &[]), &gold(&["a"]), 5), Prf::ZERO);
    }

    #[test]
    fn cutoff_truncates_and_multiword_needs_exact_match() {
        let pred = kl("d", &["x", "y", "state exam", "a"]);
        let m = doc_metrics(&pred, &gold(&["a", "state exam"]), 2);
        assert_eq!(m, Prf::ZERO);
        let m = doc_metrics(&pred, &gold(&["a", "state exam"]), 3);
        assert!(close(m.precision, 1.0 / 3.0) && close(m.recall, 0.5));
        let m = doc_metrics(&kl("d", &["state"]), &gold(&["state exam"]), 5);
        assert_eq!(m, Prf::ZERO);
    }

    #[test]
    fn cutoff_validation() {
        assert!(EvalConfig::new(vec![5, 10], true).is_ok());
        for bad in [vec![], vec![0, 5], vec![10, 5], vec![5, 5]] {
            assert!(EvalConfig::new(bad, true).is_err());
        }
    }

    fn doc(id: &str, body: &str, kws: &[&str]) -> Document {
        Document {
            id: id.into(),
            title: String::new(),
            body: body.into(),
            keywords: kws.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn macro_average_and_skips() {
        let split = DatasetSplit::new(
            SplitName::Test,
            vec![
                doc("1", "alpha beta", &["alpha"]),
                doc("2", "gamma", &["gamma"]),
                doc("3", "nothing", &["absent"]),
            ],
        )
        .unwrap();
        let preds: HashMap<String, KeywordList> = [
            ("1".to_string(), kl("1", &["alpha"])),
            ("2".to_string(), kl("2", &["x"])),
        ]
        .into_iter()
        .collect();
        let runs = [MethodRun {
            method: "m",
            predictions: &preds,
        }];
        let report = evaluate(
            &runs,
            &split,
            &TextPipeline::plain("en"),
            &EvalConfig::default(),
        )
        .unwrap();
        let m = report.method("m").unwrap();
        assert_eq!(m.evaluated, 2);
        assert_eq!(m.skipped_empty_gold, 1);
        assert_eq!(m.at(10).unwrap().f1, 0.5);

        let cfg = EvalConfig::new(vec![5, 10], false).unwrap();
        let report = evaluate(&runs, &split, &TextPipeline::plain("en"), &cfg).unwrap();
        let m = report.method("m").unwrap();
        assert_eq!(m.evaluated, 3);
        assert_eq!(m.missing_predictions, 1);
    }

    #[test]
    fn empty_evaluable_set_is_an_error() {
        let split = DatasetSplit::new(SplitName::Test, vec![doc("1", "x", &["y"])]).unwrap();
        let preds = HashMap::new();
        let runs = [MethodRun {
            method: "m",
            predictions: &preds,
        }];
        assert!(matches!(
            evaluate(
                &runs,
                &split,
                &TextPipeline::plain("en"),
                &EvalConfig::default()
            ),
            Err(EvalError::NothingToEvaluate { skipped: 1 })
        ));
    }

    #[test]
    fn table_and_csv_shape() {
        let split = DatasetSplit::new(SplitName::Test, vec![doc("1", "a b", &["a"])]).unwrap();
        let p1: HashMap<String, KeywordList> =
            [("1".to_string(), kl("1", &["a"]))].into_iter().collect();
        let p2: HashMap<String, KeywordList> = [("1".to_string(), kl("1", &["b", "a"]))]
            .into_iter()
            .collect();
        let runs = [
            MethodRun {
                method: "TF-IDF",
                predictions: &p1,
            },
            MethodRun {
                method: "TNT-KID & TF-IDF(tm)",
                predictions: &p2,
            },
        ];
        let report = evaluate(
            &runs,
            &split,
            &TextPipeline::plain("en"),
            &EvalConfig::default(),
        )
        .unwrap();
        let table = report.render_table();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 4);
        for col in ["P@5", "R@5", "F1@5", "P@10", "R@10", "F1@10"] {
            assert!(lines[0].contains(col));
        }
        assert!(lines[2].starts_with("TF-IDF "));
        assert!(lines[3].contains("0.5000"));

        let mut buf = Vec::new();
        report.write_per_doc_csv(&mut buf).unwrap();
        let csv = String::from_utf8(buf).unwrap();
        assert_eq!(csv.lines().next().unwrap(), "doc_id,method,k,P,R,F1");
        assert_eq!(csv.lines().count(), 1 + 2 * 2);

        let back: MetricsReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back, report);
    }

    proptest! {
        #[test]
        fn prefix_and_range_properties(
            pred in prop::collection::vec(0u8..12, 0..15),
            gold_items in prop::collection::btree_set(0u8..12, 1..8),
        ) {
            let names: Vec<String> = pred.iter().map(|i| format!("w{i}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let list = kl("d", &refs);
            let gold: GoldSet = gold_items.iter().map(|i| vec![format!("w{i}")]).collect();
            let at5 = doc_metrics(&list, &gold, 5);
            let at10 = doc_metrics(&list, &gold, 10);
            prop_assert!(at10.recall >= at5.recall);
            for m in [at5, at10] {
                for v in [m.precision, m.recall, m.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
                prop_assert!((m.f1 - harmonic_mean(m.precision, m.recall)).abs() < 1e-15);
            }
        }

        #[test]
        fn permuting_documents_keeps_macro_scores(seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let words = ["a", "b", "c", "d", "e"];
            let mut docs = Vec::new();
            let mut preds = HashMap::new();
            for i in 0..8 {
                let body = words[..(i % 5) + 1].join(" ");
                docs.push(doc(&format!("d{i}"), &body, &[words[i % 5], words[(i + 2) % 5]]));
                preds.insert(format!("d{i}"), kl(&format!("d{i}"), &words[(i % 3)..]));
            }
            let pipeline = TextPipeline::plain("en");
            let base = DatasetSplit::new(SplitName::Test, docs.clone()).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            docs.shuffle(&mut rng);
            let shuffled = DatasetSplit::new(SplitName::Test, docs).unwrap();
            let runs = [MethodRun { method: "m", predictions: &preds }];
            let a = evaluate(&runs, &base, &pipeline, &EvalConfig::default()).unwrap();
            let b = evaluate(&runs, &shuffled, &pipeline, &EvalConfig::default()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
