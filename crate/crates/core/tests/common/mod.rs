#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use kwexpand::corpus::{load_corpus, DatasetSplit, SplitName};
use kwexpand::extract::{KeywordList, MethodSpec, PredictionFile, Resources, TfidfTmExtractor};
use kwexpand::tagset::{SelectionStrategy, TagsetIndex};
use kwexpand::textprep::{Normalizer, StopwordList, SuffixStemmer, TextPipeline};
use kwexpand::tfidf::DfIndex;

pub const METHODS: [&str; 7] = [
    "tfidf-tm",
    "tntkid",
    "bert",
    "tntkid&tfidf-tm",
    "bert&tfidf-tm",
    "tntkid&bert",
    "tntkid&bert&tfidf-tm",
];

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn pipeline() -> TextPipeline {
    let stopwords = StopwordList::load("en", &fixture("stopwords.txt")).unwrap();
    let stemmer = SuffixStemmer::load(&fixture("suffixes.txt"), 3).unwrap();
    TextPipeline::new(stopwords, Normalizer::suffix_stemmer("en", stemmer))
}

pub struct Fixture {
    pub pipeline: TextPipeline,
    pub train: DatasetSplit,
    pub test: DatasetSplit,
    pub resources: Resources,
}

impl Fixture {
    pub fn load() -> Self {
        let pipeline = pipeline();
        let train = load_corpus(&fixture("train.jsonl"), SplitName::Train).unwrap();
        let test = load_corpus(&fixture("test.jsonl"), SplitName::Test).unwrap();
        let df = DfIndex::build(&train, &pipeline).unwrap();
        let tagset = TagsetIndex::load_provided(
            &fixture("tagset.txt"),
            &pipeline,
            SelectionStrategy::MinLength,
        )
        .unwrap();
        let mut resources = Resources::default();
        for name in ["tntkid", "bert"] {
            let preds = PredictionFile::load(&fixture(&format!("{name}.jsonl"))).unwrap();
            resources.add_predictions(name, preds, pipeline.clone());
        }
        resources.tfidf = Some(TfidfTmExtractor::new(pipeline.clone(), df, tagset, 10));
        Fixture {
            pipeline,
            train,
            test,
            resources,
        }
    }

    pub fn tfidf(&self) -> &TfidfTmExtractor {
        self.resources.tfidf.as_ref().unwrap()
    }

    pub fn run(&self, method: &str) -> Vec<KeywordList> {
        let spec = MethodSpec::parse(method).unwrap();
        self.resources
            .runner(&spec, 10)
            .unwrap()
            .run_all(self.test.documents())
    }

    pub fn run_map(&self, method: &str) -> HashMap<String, KeywordList> {
        self.run(method)
            .into_iter()
            .map(|l| (l.doc_id.clone(), l))
            .collect()
    }
}
