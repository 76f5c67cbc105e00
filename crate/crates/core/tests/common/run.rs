//! One complete fixture run: generate, train, then both acquisition paths.

use std::path::Path;

use searchcrawl::features::DictionaryConfig;
use searchcrawl::fixtures::{generate_fixtures, FixtureSpec};
use searchcrawl::pipeline::*;
use searchcrawl::store::{DocumentStore, Manifest};

pub struct Run {
    pub manifest: Manifest,
    pub outcomes: Vec<QueryOutcome>,
    pub eval: PipelineEval,
    pub ledger: String,
    pub truth: GroundTruth,
}

pub fn run(spec: &FixtureSpec, dir: &Path) -> Run {
    generate_fixtures(spec, dir).unwrap();
    let cfg = PipelineConfig::load(dir.join("pipeline.toml")).unwrap();
    let pages = load_homepage_data(&cfg).unwrap();
    let (ranker, _) = train_homepage_ranker(
        &pages,
        cfg.training.folds,
        cfg.seed,
        &DictionaryConfig::default(),
        &cfg.training.ranker,
    )
    .unwrap();
    let docs = load_labeled_documents(cfg.training.documents.as_ref().unwrap()).unwrap();
    let (forest, _) = train_classifier(&docs, &cfg.training.forest, cfg.training.test_fraction, cfg.seed).unwrap();
    let clock = cfg.make_clock();
    let backend = cfg.open_search_backend(clock.clone()).unwrap();
    let fetcher = cfg.open_fetcher(clock.clone()).unwrap();
    let store = DocumentStore::open(&cfg.store_root, clock.clone()).unwrap();
    let targets = load_targets(cfg.targets.as_ref().unwrap()).unwrap();
    let titles = read_lines(cfg.titles.as_ref().unwrap()).unwrap();
    let authors = read_lines(cfg.authors.as_ref().unwrap()).unwrap();
    let pipeline = Pipeline::new(
        backend.as_ref(),
        fetcher.as_ref(),
        &store,
        &forest,
        Some(&ranker),
        None,
        &targets,
        RunSettings::from_config(&cfg),
        clock,
    );
    let mut outcomes = pipeline.run_path1(&titles);
    outcomes.extend(pipeline.run_path2(&authors));
    let manifest = pipeline.manifest();
    let truth = GroundTruth::load(cfg.ground_truth.as_ref().unwrap()).unwrap();
    let eval = evaluate_pipeline(&manifest, &store.records(), &targets, Some(&truth));
    let ledger = std::fs::read_to_string(cfg.store_root.join("ledger.jsonl")).unwrap();
    Run {
        manifest,
        outcomes,
        eval,
        ledger,
        truth,
    }
}
