//! `searchcrawl`: command-line front end for the acquisition pipeline.
//!
//! ```text
//! searchcrawl generate-fixtures --out fx
//! searchcrawl --config fx/pipeline.toml train-ranker
//! searchcrawl --config fx/pipeline.toml train-classifier
//! searchcrawl --config fx/pipeline.toml run-path1
//! searchcrawl --config fx/pipeline.toml run-path2
//! searchcrawl --config fx/pipeline.toml eval pipeline
//! ```
//!
//! Exit codes: 0 success, 1 usage error, 2 data or parse error, 3 backend
//! error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use searchcrawl::crawler::{crawl, NullSink};
use searchcrawl::doc::{extract_title_heuristic, ingest_bytes, TextExtractor};
use searchcrawl::error::{Error, Result};
use searchcrawl::features::DictionaryConfig;
use searchcrawl::fixtures::{generate_fixtures, FixtureSpec};
use searchcrawl::forest::{evaluate_classifier, stratified_split, RandomForestModel};
use searchcrawl::ltr::{evaluate_ranker, HomepageRanker, RankEvalReport};
use searchcrawl::pipeline::*;
use searchcrawl::search::{execute, record_fixture, Query};
use searchcrawl::store::{export_report, AcquisitionPath, DocumentStore, Manifest};

const DEFAULT_CONFIG: &str = "pipeline.toml";

#[derive(Parser)]
#[command(name = "searchcrawl", version, about = "Search-driven acquisition of research documents")]
struct Cli {
    /// Pipeline configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output location; its meaning depends on the subcommand.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Overrides the search and fetch backends.
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendArg>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Live,
    Fixture,
}

#[derive(Subcommand)]
enum Command {
    /// Writes the synthetic fixture tree (default `--out fixtures`).
    GenerateFixtures {
        /// JSON fixture spec; unspecified fields keep their defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        authors: Option<usize>,
    },
    /// Trains the homepage ranker and reports cross-validated accuracy.
    TrainRanker {
        /// Labeled homepage queries (JSONL); defaults to the configured path.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Trains the paper classifier and reports held-out metrics.
    TrainClassifier {
        /// Labeled documents (JSONL); defaults to the configured path.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Runs one query and prints the result page.
    Search {
        text: String,
        /// Author query instead of a title query.
        #[arg(long)]
        author: bool,
        /// Appends the page to this search fixture.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Crawls one seed URL and prints the fetch records.
    Crawl {
        seed_url: String,
        #[arg(long)]
        depth: Option<u32>,
    },
    /// Classifies one document (pre-extracted JSON or raw bytes).
    Classify { path: PathBuf },
    /// Title queries: search and fetch the top results.
    RunPath1 {
        /// One title per line; defaults to the configured list.
        #[arg(long)]
        titles: Option<PathBuf>,
    },
    /// Author queries: rank a homepage and crawl it.
    RunPath2 {
        /// One name per line; defaults to the configured list.
        #[arg(long)]
        authors: Option<PathBuf>,
    },
    /// Evaluates a model or a finished run.
    Eval {
        #[arg(value_enum)]
        kind: EvalKind,
    },
    /// Rebuilds the manifest from the store ledger and writes the report.
    Report,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalKind {
    Ranker,
    Classifier,
    Pipeline,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_backend_error() {
        3
    } else {
        2
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None if Path::new(DEFAULT_CONFIG).exists() => PipelineConfig::load(DEFAULT_CONFIG)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(b) = cli.backend {
        let kind = match b {
            BackendArg::Live => BackendKind::Live,
            BackendArg::Fixture => BackendKind::Fixture,
        };
        cfg.search.backend = kind;
        cfg.fetch.backend = kind;
    }
    Ok(cfg)
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn report_dir(cli: &Cli, cfg: &PipelineConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.report_dir.clone())
        .unwrap_or_else(|| PathBuf::from("report"))
}

fn outcomes_file(dir: &Path, path: AcquisitionPath) -> PathBuf {
    dir.join(format!("outcomes-{}.jsonl", path.short_name()))
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::GenerateFixtures { spec, authors } => {
            let mut s: FixtureSpec = match spec {
                Some(p) => serde_json::from_slice(&fs::read(p)?)?,
                None => FixtureSpec::default(),
            };
            if let Some(seed) = cli.seed {
                s.seed = seed;
            }
            if let Some(n) = authors {
                s.n_authors = *n;
            }
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("fixtures"));
            print_json(&generate_fixtures(&s, &out)?)
        }
        Command::TrainRanker { data } => {
            let cfg = load_config(&cli)?;
            let pages = match data {
                Some(p) => searchcrawl::features::load_labeled_pages(p)?,
                None => load_homepage_data(&cfg)?,
            };
            let (ranker, training) = train_homepage_ranker(
                &pages,
                cfg.training.folds,
                cfg.seed,
                &DictionaryConfig::default(),
                &cfg.training.ranker,
            )?;
            for (kind, report) in &training.cross_validation {
                println!("{}\taccuracy={:.4}", kind.label(), report.accuracy());
            }
            let out = cli.out.clone().unwrap_or_else(|| cfg.ranker_model.clone());
            save_with_parent(&out, |p| ranker.save(p))?;
            println!("model written to {}", out.display());
            Ok(())
        }
        Command::TrainClassifier { data } => {
            let cfg = load_config(&cli)?;
            let docs = load_documents(&cfg, data.as_deref())?;
            let (model, training) =
                train_classifier(&docs, &cfg.training.forest, cfg.training.test_fraction, cfg.seed)?;
            println!("train={} test={}", training.train_size, training.test_size);
            print_json(&training.report)?;
            let out = cli.out.clone().unwrap_or_else(|| cfg.classifier_model.clone());
            save_with_parent(&out, |p| model.save(p))?;
            println!("model written to {}", out.display());
            Ok(())
        }
        Command::Search { text, author, record } => {
            let cfg = load_config(&cli)?;
            let clock = cfg.make_clock();
            let backend = cfg.open_search_backend(clock.clone())?;
            let mut query = if *author { Query::author(text)? } else { Query::title(text)? };
            query.top_k = cfg.top_k;
            let page = execute(&query, backend.as_ref(), clock.as_ref())?;
            if let Some(path) = record {
                record_fixture(&page, path)?;
            }
            print_json(&page)
        }
        Command::Crawl { seed_url, depth } => {
            let cfg = load_config(&cli)?;
            let clock = cfg.make_clock();
            let fetcher = cfg.open_fetcher(clock.clone())?;
            let mut job = cfg.crawl_template();
            job.seeds = vec![seed_url.clone()];
            if let Some(d) = depth {
                job.max_depth = *d;
            }
            for rec in crawl(&job, fetcher.as_ref(), &NullSink, clock)? {
                println!("{}", serde_json::to_string(&rec)?);
            }
            Ok(())
        }
        Command::Classify { path } => {
            let cfg = load_config(&cli)?;
            let model = RandomForestModel::load(&cfg.classifier_model)?;
            let bytes = fs::read(path)?;
            let id = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let extractor = cfg.extractor.as_ref().map(|e| e as &dyn TextExtractor);
            let doc = ingest_bytes(&id, &bytes, extractor)?;
            let pred = classify_document(&model, &doc)?;
            let title = extract_title_heuristic(&doc).ok().map(|t| t.raw);
            print_json(&serde_json::json!({
                "doc_id": doc.doc_id,
                "is_paper": pred.is_paper,
                "score": pred.score,
                "title": title,
            }))
        }
        Command::RunPath1 { titles } => {
            let cfg = load_config(&cli)?;
            let list = titles.clone().or_else(|| cfg.titles.clone());
            cfg.require_paths(&[("titles", list.as_deref())])?;
            let titles = read_lines(list.as_deref().expect("checked"))?;
            run_path(&cli, &cfg, AcquisitionPath::Path1Search, &titles)
        }
        Command::RunPath2 { authors } => {
            let cfg = load_config(&cli)?;
            let list = authors.clone().or_else(|| cfg.authors.clone());
            cfg.require_paths(&[("authors", list.as_deref())])?;
            let names = read_lines(list.as_deref().expect("checked"))?;
            run_path(&cli, &cfg, AcquisitionPath::Path2Crawl, &names)
        }
        Command::Eval { kind } => {
            let cfg = load_config(&cli)?;
            match kind {
                EvalKind::Ranker => eval_ranker(&cfg),
                EvalKind::Classifier => eval_classifier(&cfg),
                EvalKind::Pipeline => eval_pipeline(&cli, &cfg),
            }
        }
        Command::Report => {
            let cfg = load_config(&cli)?;
            let dir = report_dir(&cli, &cfg);
            let manifest = rebuild_manifest(&cfg, &dir)?;
            for p in export_report(&manifest, &dir)? {
                println!("{}", p.display());
            }
            print!("{}", searchcrawl::store::report_tsv(&manifest));
            Ok(())
        }
    }
}

fn save_with_parent(path: &Path, save: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    save(path)
}

fn load_documents(cfg: &PipelineConfig, data: Option<&Path>) -> Result<Vec<LabeledDocument>> {
    let path = data.map(Path::to_path_buf).or_else(|| cfg.training.documents.clone());
    cfg.require_paths(&[("training.documents", path.as_deref())])?;
    load_labeled_documents(path.expect("checked"))
}

fn run_path(cli: &Cli, cfg: &PipelineConfig, path: AcquisitionPath, items: &[String]) -> Result<()> {
    let clock = cfg.make_clock();
    let backend = cfg.open_search_backend(clock.clone())?;
    let fetcher = cfg.open_fetcher(clock.clone())?;
    let store = DocumentStore::open(&cfg.store_root, clock.clone())?;
    let classifier = RandomForestModel::load(&cfg.classifier_model)?;
    let ranker = match path {
        AcquisitionPath::Path2Crawl => Some(HomepageRanker::load(&cfg.ranker_model)?),
        AcquisitionPath::Path1Search => None,
    };
    let targets = match &cfg.targets {
        Some(p) => load_targets(p)?,
        None => Vec::new(),
    };
    let extractor = cfg.extractor.as_ref().map(|e| e as &dyn TextExtractor);
    let pipeline = Pipeline::new(
        backend.as_ref(),
        fetcher.as_ref(),
        &store,
        &classifier,
        ranker.as_ref(),
        extractor,
        &targets,
        RunSettings::from_config(cfg),
        clock,
    );
    let outcomes = match path {
        AcquisitionPath::Path1Search => pipeline.run_path1(items),
        AcquisitionPath::Path2Crawl => pipeline.run_path2(items),
    };
    let dir = report_dir(cli, cfg);
    fs::create_dir_all(&dir)?;
    let mut lines = String::new();
    for o in &outcomes {
        lines.push_str(&serde_json::to_string(o)?);
        lines.push('\n');
        if let Some(reason) = &o.reason {
            log::warn!("{}: {reason}", o.text);
        }
    }
    fs::write(outcomes_file(&dir, path), lines)?;
    let m = pipeline.manifest();
    let slice = m.path(path);
    println!(
        "{}: queries={} pdfs={} papers={} unique_titles={} target_matches={}",
        path.short_name(),
        slice.queries_issued,
        slice.pdfs_fetched,
        slice.papers_classified,
        slice.unique_titles,
        slice.target_matches
    );
    let manifest = rebuild_manifest(cfg, &dir)?;
    export_report(&manifest, &dir)?;
    Ok(())
}

/// Counts queries from the saved outcome files and everything else from
/// the store ledger, so separate path runs add up to one manifest.
fn rebuild_manifest(cfg: &PipelineConfig, dir: &Path) -> Result<Manifest> {
    let mut queries = [0u64; 2];
    for (i, p) in AcquisitionPath::ALL.into_iter().enumerate() {
        let f = outcomes_file(dir, p);
        if f.exists() {
            queries[i] = fs::read_to_string(&f)?.lines().filter(|l| !l.trim().is_empty()).count() as u64;
        }
    }
    let store = DocumentStore::open(&cfg.store_root, cfg.make_clock())?;
    Ok(Manifest::from_records(&store.records(), queries))
}

fn print_rank_report(report: &RankEvalReport) {
    println!(
        "queries={} precision={:.4} recall={:.4} f1={:.4}",
        report.per_query.len(),
        report.precision,
        report.recall,
        report.f1
    );
}

fn eval_ranker(cfg: &PipelineConfig) -> Result<()> {
    let ranker = HomepageRanker::load(&cfg.ranker_model)?;
    let pages = load_homepage_data(cfg)?;
    let groups = pages
        .iter()
        .map(|p| p.vectorize(&ranker.dictionaries))
        .collect::<Result<Vec<_>>>()?;
    print_rank_report(&evaluate_ranker(&groups, &ranker.model)?);
    Ok(())
}

fn eval_classifier(cfg: &PipelineConfig) -> Result<()> {
    let model = RandomForestModel::load(&cfg.classifier_model)?;
    let docs = load_documents(cfg, None)?;
    let x: Vec<_> = docs
        .iter()
        .map(|d| searchcrawl::doc::extract_structural_features(&d.document))
        .collect();
    let y: Vec<bool> = docs.iter().map(|d| d.kind.is_paper()).collect();
    // Same split as training, so this is the held-out part.
    let (_, test) = stratified_split(&y, cfg.training.test_fraction, cfg.seed);
    let xt: Vec<_> = test.iter().map(|&i| x[i]).collect();
    let yt: Vec<bool> = test.iter().map(|&i| y[i]).collect();
    let report = evaluate_classifier(&model, &xt, &yt)?;
    println!("class\tprecision\trecall\tf1\tsupport");
    for (name, m) in [("paper", &report.paper), ("non-paper", &report.non_paper), ("weighted", &report.weighted)] {
        println!("{name}\t{:.4}\t{:.4}\t{:.4}\t{}", m.precision, m.recall, m.f1, m.support);
    }
    println!("accuracy\t{:.4}", report.accuracy);
    Ok(())
}

fn eval_pipeline(cli: &Cli, cfg: &PipelineConfig) -> Result<()> {
    let dir = report_dir(cli, cfg);
    let manifest = rebuild_manifest(cfg, &dir)?;
    let store = DocumentStore::open(&cfg.store_root, cfg.make_clock())?;
    let targets = match &cfg.targets {
        Some(p) => load_targets(p)?,
        None => Vec::new(),
    };
    let truth = match &cfg.ground_truth {
        Some(p) => Some(GroundTruth::load(p)?),
        None => None,
    };
    let eval = evaluate_pipeline(&manifest, &store.records(), &targets, truth.as_ref());
    println!(
        "recovered {}/{} targets ({:.4})",
        eval.recovered_targets.len(),
        targets.len(),
        eval.recovered_fraction
    );
    if let Some(expected) = eval.expected_fraction {
        println!("expected fraction {expected:.4}");
    }
    if truth.is_some() {
        println!("manifest matches ground truth: {}", eval.manifest_matches);
        for d in &eval.differences {
            println!("  {d}");
        }
        if !eval.manifest_matches {
            return Err(Error::Invariant("pipeline output differs from ground truth".into()));
        }
    }
    Ok(())
}
