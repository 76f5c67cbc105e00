//! End-to-end orchestration of both acquisition paths, plus the training
//! and evaluation entry points used by the CLI.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::clock::{Clock, SimulatedClock, SystemClock};
use crate::crawler::{
    canonicalize_url, crawl_paced, host_key, is_pdf_path, CrawlJob, CrawlScope, DocumentSink, FetchRecord,
    FetchStatus, FixtureFetcher, HostPacer, HttpFetcher, LiveFetcher, Politeness, DEFAULT_USER_AGENT,
};
use crate::doc::{extract_structural_features, extract_title_heuristic, ingest_bytes, CommandExtractor,
    NormalizedDocument, TextExtractor};
use crate::error::{Error, Result};
use crate::features::{load_labeled_pages, DictionaryConfig, LabeledPage};
use crate::forest::{
    evaluate_classifier, stratified_split, train_forest, ClassifierEvalReport, ForestConfig, Prediction,
    RandomForestModel,
};
use crate::ltr::{cross_validate, HomepageRanker, RankEvalReport, RankerKind, TrainConfig};
use crate::search::{execute, FixtureBackend, LiveBackend, LiveConfig, Query, SearchBackend, DEFAULT_TOP_K};
use crate::store::{
    first_matching_target, AcquisitionPath, ClassifierLabel, DocumentRecord, DocumentStore, Manifest,
    ManifestAccumulator, PutMeta, Target,
};
use crate::urlutil::parse_lenient;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocKind {
    Paper,
    Slides,
    Cv,
    Thesis,
    Book,
    Other,
}

impl DocKind {
    pub const ALL: [DocKind; 6] = [
        DocKind::Paper,
        DocKind::Slides,
        DocKind::Cv,
        DocKind::Thesis,
        DocKind::Book,
        DocKind::Other,
    ];

    pub fn is_paper(self) -> bool {
        self == DocKind::Paper
    }
}

/// One line of a labeled document file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDocument {
    pub kind: DocKind,
    pub document: NormalizedDocument,
}

pub fn load_labeled_documents(path: impl AsRef<Path>) -> Result<Vec<LabeledDocument>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LabeledDocument = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn classify_document(model: &RandomForestModel, doc: &NormalizedDocument) -> Result<Prediction> {
    model.predict(extract_structural_features(doc).as_slice())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierTraining {
    pub train_size: usize,
    pub test_size: usize,
    pub report: ClassifierEvalReport,
}

/// Trains on a stratified split and evaluates on the held-out part.
pub fn train_classifier(
    docs: &[LabeledDocument],
    config: &ForestConfig,
    test_fraction: f64,
    split_seed: u64,
) -> Result<(RandomForestModel, ClassifierTraining)> {
    let x: Vec<_> = docs.iter().map(|d| extract_structural_features(&d.document)).collect();
    let y: Vec<bool> = docs.iter().map(|d| d.kind.is_paper()).collect();
    let (train, test) = stratified_split(&y, test_fraction, split_seed);
    if test.is_empty() {
        return Err(Error::invalid("test split is empty; add documents or raise test_fraction"));
    }
    let pick = |idx: &[usize]| -> (Vec<_>, Vec<bool>) { (idx.iter().map(|&i| x[i]).collect(), idx.iter().map(|&i| y[i]).collect()) };
    let (xtr, ytr) = pick(&train);
    let (xte, yte) = pick(&test);
    let model = train_forest(&xtr, &ytr, config)?;
    let report = evaluate_classifier(&model, &xte, &yte)?;
    Ok((
        model,
        ClassifierTraining {
            train_size: train.len(),
            test_size: test.len(),
            report,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankerTraining {
    pub folds: usize,
    pub cross_validation: Vec<(RankerKind, RankEvalReport)>,
}

impl RankerTraining {
    pub fn accuracy(&self, kind: RankerKind) -> Option<f64> {
        self.cross_validation
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, r)| r.accuracy())
    }
}

/// Cross-validates every ranker kind, then fits the RankSVM on all pages.
pub fn train_homepage_ranker(
    pages: &[LabeledPage],
    folds: usize,
    fold_seed: u64,
    dict_config: &DictionaryConfig,
    config: &TrainConfig,
) -> Result<(HomepageRanker, RankerTraining)> {
    let cross_validation = RankerKind::ALL
        .iter()
        .map(|&k| cross_validate(pages, folds, fold_seed, dict_config, k, config).map(|r| (k, r)))
        .collect::<Result<Vec<_>>>()?;
    let ranker = HomepageRanker::train(pages, dict_config, config)?;
    Ok((
        ranker,
        RankerTraining {
            folds,
            cross_validation,
        },
    ))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Fixture,
    Live,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    #[default]
    Simulated,
    System,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSettings {
    pub backend: BackendKind,
    pub fixture: Option<PathBuf>,
    pub live: LiveConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FetchSettings {
    pub backend: BackendKind,
    pub web_root: Option<PathBuf>,
    pub user_agent: String,
}

impl Default for FetchSettings {
    fn default() -> Self {
        Self {
            backend: BackendKind::Fixture,
            web_root: None,
            user_agent: DEFAULT_USER_AGENT.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrawlSettings {
    pub max_depth: u32,
    pub scope: CrawlScope,
    pub per_host_delay_ms: u64,
    pub max_pages: usize,
    pub obey_robots: bool,
    pub fetch_timeout_ms: u64,
    pub workers: usize,
}

impl Default for CrawlSettings {
    fn default() -> Self {
        let job = CrawlJob::new(Vec::new());
        Self {
            max_depth: job.max_depth,
            scope: job.scope,
            per_host_delay_ms: job.politeness.per_host_delay_ms,
            max_pages: job.politeness.max_pages,
            obey_robots: job.politeness.obey_robots,
            fetch_timeout_ms: job.fetch_timeout_ms,
            workers: job.workers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSettings {
    pub homepage_data: Option<PathBuf>,
    pub documents: Option<PathBuf>,
    pub folds: usize,
    pub test_fraction: f64,
    pub ranker: TrainConfig,
    pub forest: ForestConfig,
}

impl Default for TrainingSettings {
    fn default() -> Self {
        Self {
            homepage_data: None,
            documents: None,
            folds: 5,
            test_fraction: 0.25,
            ranker: TrainConfig::default(),
            forest: ForestConfig::default(),
        }
    }
}

/// The single configuration document. Relative paths are resolved against
/// the directory containing the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub top_k: usize,
    /// Queries processed concurrently.
    pub workers: usize,
    pub clock: ClockMode,
    pub clock_start_ms: Option<u64>,
    pub store_root: PathBuf,
    pub report_dir: Option<PathBuf>,
    pub ranker_model: PathBuf,
    pub classifier_model: PathBuf,
    pub targets: Option<PathBuf>,
    pub titles: Option<PathBuf>,
    pub authors: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    pub exclude_domains: Vec<String>,
    pub search: SearchSettings,
    pub fetch: FetchSettings,
    pub crawl: CrawlSettings,
    pub extractor: Option<CommandExtractor>,
    pub training: TrainingSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            top_k: DEFAULT_TOP_K,
            workers: 1,
            clock: ClockMode::Simulated,
            clock_start_ms: None,
            store_root: PathBuf::from("store"),
            report_dir: None,
            ranker_model: PathBuf::from("models/ranker.json"),
            classifier_model: PathBuf::from("models/classifier.json"),
            targets: None,
            titles: None,
            authors: None,
            ground_truth: None,
            exclude_domains: Vec::new(),
            search: SearchSettings::default(),
            fetch: FetchSettings::default(),
            crawl: CrawlSettings::default(),
            extractor: None,
            training: TrainingSettings::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve_paths(base_dir);
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let fix_opt = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        fix(&mut self.store_root);
        fix(&mut self.ranker_model);
        fix(&mut self.classifier_model);
        for p in [
            &mut self.report_dir,
            &mut self.targets,
            &mut self.titles,
            &mut self.authors,
            &mut self.ground_truth,
            &mut self.search.fixture,
            &mut self.fetch.web_root,
            &mut self.training.homepage_data,
            &mut self.training.documents,
        ] {
            fix_opt(p);
        }
    }

    pub fn make_clock(&self) -> Arc<dyn Clock> {
        match self.clock {
            ClockMode::Simulated => Arc::new(match self.clock_start_ms {
                Some(t) => SimulatedClock::new(t),
                None => SimulatedClock::default(),
            }),
            ClockMode::System => Arc::new(SystemClock),
        }
    }

    pub fn crawl_template(&self) -> CrawlJob {
        CrawlJob {
            seeds: Vec::new(),
            max_depth: self.crawl.max_depth,
            scope: self.crawl.scope,
            politeness: Politeness {
                per_host_delay_ms: self.crawl.per_host_delay_ms,
                max_pages: self.crawl.max_pages,
                obey_robots: self.crawl.obey_robots,
                user_agent: self.fetch.user_agent.clone(),
            },
            fetch_timeout_ms: self.crawl.fetch_timeout_ms,
            workers: self.crawl.workers,
        }
    }

    pub fn open_search_backend(&self, clock: Arc<dyn Clock>) -> Result<Box<dyn SearchBackend>> {
        match self.search.backend {
            BackendKind::Fixture => {
                let path = self
                    .search
                    .fixture
                    .as_ref()
                    .ok_or_else(|| Error::Config("search.fixture is required for the fixture backend".into()))?;
                Ok(Box::new(FixtureBackend::load(path)?))
            }
            BackendKind::Live => Ok(Box::new(LiveBackend::new(
                self.search.live.clone().with_env_overrides(),
                clock,
            )?)),
        }
    }

    pub fn open_fetcher(&self, clock: Arc<dyn Clock>) -> Result<Box<dyn HttpFetcher>> {
        match self.fetch.backend {
            BackendKind::Fixture => {
                let root = self
                    .fetch
                    .web_root
                    .as_ref()
                    .ok_or_else(|| Error::Config("fetch.web_root is required for the fixture fetcher".into()))?;
                if !root.is_dir() {
                    return Err(Error::Config(format!("web root {} does not exist", root.display())));
                }
                Ok(Box::new(FixtureFetcher::from_dir(root, clock)))
            }
            BackendKind::Live => Ok(Box::new(LiveFetcher::new(self.fetch.user_agent.clone()))),
        }
    }

    /// Fails with a config error naming the first missing path.
    pub fn require_paths(&self, paths: &[(&str, Option<&Path>)]) -> Result<()> {
        for (name, p) in paths {
            match p {
                None => return Err(Error::Config(format!("`{name}` is not configured"))),
                Some(p) if !p.exists() => {
                    return Err(Error::Config(format!("`{name}` path {} does not exist", p.display())))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    Ok(fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

pub fn load_targets(path: &Path) -> Result<Vec<Target>> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSettings {
    pub top_k: usize,
    pub exclude_domains: Vec<String>,
    pub crawl: CrawlJob,
    pub workers: usize,
}

impl RunSettings {
    pub fn from_config(cfg: &PipelineConfig) -> Self {
        Self {
            top_k: cfg.top_k,
            exclude_domains: cfg.exclude_domains.clone(),
            crawl: cfg.crawl_template(),
            workers: cfg.workers,
        }
    }

    fn excluded(&self, host: &str) -> bool {
        let host = host.to_ascii_lowercase();
        self.exclude_domains.iter().any(|d| {
            let d = d.trim().trim_start_matches('.').to_ascii_lowercase();
            !d.is_empty() && (host == d || host.ends_with(&format!(".{d}")))
        })
    }
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            top_k: DEFAULT_TOP_K,
            exclude_domains: Vec::new(),
            crawl: CrawlJob::new(Vec::new()),
            workers: 1,
        }
    }
}

/// What happened to one title or author query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub path: AcquisitionPath,
    pub query_id: Option<String>,
    pub text: String,
    pub results: usize,
    pub skipped_excluded: usize,
    pub pdfs: usize,
    pub papers: usize,
    /// Predicted homepage (Path 2).
    pub seed: Option<String>,
    /// Why the query produced nothing, if it failed as a whole.
    pub reason: Option<String>,
    pub fetches: Vec<FetchRecord>,
}

impl QueryOutcome {
    fn new(path: AcquisitionPath, text: &str) -> Self {
        Self {
            path,
            query_id: None,
            text: text.to_string(),
            results: 0,
            skipped_excluded: 0,
            pdfs: 0,
            papers: 0,
            seed: None,
            reason: None,
            fetches: Vec::new(),
        }
    }
}

/// Shared state of one harvesting run over both paths.
pub struct Pipeline<'a> {
    pub backend: &'a dyn SearchBackend,
    pub fetcher: &'a dyn HttpFetcher,
    pub store: &'a DocumentStore,
    pub classifier: &'a RandomForestModel,
    pub ranker: Option<&'a HomepageRanker>,
    pub extractor: Option<&'a dyn TextExtractor>,
    pub targets: &'a [Target],
    pub settings: RunSettings,
    clock: Arc<dyn Clock>,
    pacer: HostPacer,
    acc: Mutex<ManifestAccumulator>,
    absorb: Mutex<()>,
}

struct PathSink<'p, 'a> {
    pipeline: &'p Pipeline<'a>,
    path: AcquisitionPath,
    papers: AtomicUsize,
}

impl DocumentSink for PathSink<'_, '_> {
    fn store_pdf(&self, bytes: &[u8], url: &str, seed: &str) -> Result<String> {
        let (record, blob) = self.pipeline.absorb_pdf(bytes, url, self.path, seed)?;
        if record.is_paper() {
            self.papers.fetch_add(1, Ordering::Relaxed);
        }
        Ok(blob.display().to_string())
    }
}

fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(item) = items.get(i) else { break };
                *slots[i].lock().expect("slot lock") = Some(f(item));
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every item processed"))
        .collect()
}

impl<'a> Pipeline<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        backend: &'a dyn SearchBackend,
        fetcher: &'a dyn HttpFetcher,
        store: &'a DocumentStore,
        classifier: &'a RandomForestModel,
        ranker: Option<&'a HomepageRanker>,
        extractor: Option<&'a dyn TextExtractor>,
        targets: &'a [Target],
        settings: RunSettings,
        clock: Arc<dyn Clock>,
    ) -> Self {
        let pacer = HostPacer::new(clock.clone(), settings.crawl.politeness.per_host_delay_ms);
        Self {
            backend,
            fetcher,
            store,
            classifier,
            ranker,
            extractor,
            targets,
            settings,
            clock,
            pacer,
            acc: Mutex::new(ManifestAccumulator::default()),
            absorb: Mutex::new(()),
        }
    }

    pub fn manifest(&self) -> Manifest {
        self.acc.lock().expect("acc lock").finish()
    }

    /// Stores a PDF, analyzes it on first sight and feeds the manifest.
    fn absorb_pdf(
        &self,
        bytes: &[u8],
        url: &str,
        path: AcquisitionPath,
        origin: &str,
    ) -> Result<(DocumentRecord, PathBuf)> {
        let _guard = self.absorb.lock().expect("absorb lock");
        let out = self.store.put(
            bytes,
            PutMeta {
                source_url: url.to_string(),
                acquisition_path: path,
                origin: origin.to_string(),
            },
        )?;
        let record = if out.created {
            self.analyze(&out.record.content_hash, bytes)?
        } else {
            out.record
        };
        let mut acc = self.acc.lock().expect("acc lock");
        acc.pdf_fetched(path, &record.content_hash);
        acc.classified(path, &record, url);
        Ok((record, out.blob_path))
    }

    fn analyze(&self, hash: &str, bytes: &[u8]) -> Result<DocumentRecord> {
        let doc = match ingest_bytes(hash, bytes, self.extractor) {
            Ok(d) => d,
            Err(e) => {
                log::warn!("{hash}: {e}");
                return self.store.annotate(hash, ClassifierLabel::Unclassified, None, None, None);
            }
        };
        let pred = classify_document(self.classifier, &doc)?;
        let label = if pred.is_paper {
            ClassifierLabel::Paper
        } else {
            ClassifierLabel::NonPaper
        };
        let title = extract_title_heuristic(&doc).ok();
        let matched = if pred.is_paper {
            first_matching_target(&doc, self.targets).map(|t| t.id.clone())
        } else {
            None
        };
        self.store.annotate(hash, label, Some(pred.score), title, matched)
    }

    fn fetch_direct(&self, raw_url: &str, origin: &str, out: &mut QueryOutcome) {
        let mut record = FetchRecord {
            url: raw_url.to_string(),
            seed: origin.to_string(),
            depth: 0,
            status: FetchStatus::Error,
            http_status: None,
            content_hash: None,
            stored_path: None,
            error: None,
        };
        let url = match parse_lenient(raw_url).and_then(|u| canonicalize_url(u.as_str(), None)) {
            Ok(u) => u,
            Err(e) => {
                record.error = Some(e.to_string());
                out.fetches.push(record);
                return;
            }
        };
        record.url = url.to_string();
        if self.settings.excluded(url.host_str().unwrap_or("")) {
            out.skipped_excluded += 1;
            record.status = FetchStatus::SkippedScope;
            out.fetches.push(record);
            return;
        }
        let timeout = self.settings.crawl.fetch_timeout_ms;
        match self.pacer.run(&host_key(&url), || self.fetcher.get(&url, timeout)) {
            Err(e) => record.error = Some(e.to_string()),
            Ok(resp) => {
                record.http_status = Some(resp.status);
                let ct = resp
                    .content_type
                    .as_deref()
                    .map(|c| c.split(';').next().unwrap_or("").trim().to_ascii_lowercase());
                if !(200..300).contains(&resp.status) {
                    record.error = Some(format!("HTTP {}", resp.status));
                } else if ct.as_deref() == Some("application/pdf") || is_pdf_path(&url) {
                    record.content_hash = Some(crate::crawler::sha256_hex(&resp.body));
                    match self.absorb_pdf(&resp.body, url.as_str(), AcquisitionPath::Path1Search, origin) {
                        Ok((rec, blob)) => {
                            record.status = FetchStatus::FetchedPdf;
                            record.stored_path = Some(blob.display().to_string());
                            out.pdfs += 1;
                            if rec.is_paper() {
                                out.papers += 1;
                            }
                        }
                        Err(e) => record.error = Some(format!("store failed: {e}")),
                    }
                } else {
                    record.status = if matches!(ct.as_deref(), Some("text/html")) {
                        FetchStatus::FetchedHtml
                    } else {
                        FetchStatus::FetchedOther
                    };
                }
            }
        }
        out.fetches.push(record);
    }

    fn title_query(&self, title: &str) -> QueryOutcome {
        let mut out = QueryOutcome::new(AcquisitionPath::Path1Search, title);
        self.acc.lock().expect("acc lock").query_issued(AcquisitionPath::Path1Search);
        let page = Query::title(title)
            .and_then(|q| q.with_top_k(self.settings.top_k))
            .and_then(|q| {
                out.query_id = Some(q.id.clone());
                execute(&q, self.backend, self.clock.as_ref())
            });
        let page = match page {
            Ok(p) => p,
            Err(e) => {
                log::warn!("title query `{title}` failed: {e}");
                out.reason = Some(e.to_string());
                return out;
            }
        };
        out.results = page.results.len();
        if page.results.is_empty() {
            out.reason = Some("no results".into());
        }
        for r in &page.results {
            self.fetch_direct(&r.url, &page.query.id, &mut out);
        }
        out
    }

    fn author_query(&self, name: &str) -> QueryOutcome {
        let mut out = QueryOutcome::new(AcquisitionPath::Path2Crawl, name);
        self.acc.lock().expect("acc lock").query_issued(AcquisitionPath::Path2Crawl);
        let Some(ranker) = self.ranker else {
            out.reason = Some("no homepage ranker loaded".into());
            return out;
        };
        let page = Query::author(name)
            .and_then(|q| q.with_top_k(self.settings.top_k))
            .and_then(|q| {
                out.query_id = Some(q.id.clone());
                execute(&q, self.backend, self.clock.as_ref())
            });
        let page = match page {
            Ok(p) => p,
            Err(e) => {
                log::warn!("author query `{name}` failed: {e}");
                out.reason = Some(e.to_string());
                return out;
            }
        };
        out.results = page.results.len();
        if page.results.is_empty() {
            out.reason = Some("no results".into());
            return out;
        }
        let seed = match ranker
            .predict(&page)
            .and_then(|r| parse_lenient(&r.url))
            .and_then(|u| canonicalize_url(u.as_str(), None))
        {
            Ok(u) => u.to_string(),
            Err(e) => {
                out.reason = Some(format!("homepage prediction failed: {e}"));
                return out;
            }
        };
        out.seed = Some(seed.clone());
        let job = CrawlJob {
            seeds: vec![seed],
            ..self.settings.crawl.clone()
        };
        let sink = PathSink {
            pipeline: self,
            path: AcquisitionPath::Path2Crawl,
            papers: AtomicUsize::new(0),
        };
        match crawl_paced(&job, self.fetcher, &sink, &self.pacer) {
            Ok(records) => {
                out.pdfs = records.iter().filter(|r| r.status == FetchStatus::FetchedPdf).count();
                out.papers = sink.papers.load(Ordering::Relaxed);
                out.fetches = records;
            }
            Err(e) => out.reason = Some(e.to_string()),
        }
        out
    }

    /// Title queries: search, download every top-k result that is a PDF
    /// and not on an excluded domain. Links are never followed.
    pub fn run_path1(&self, titles: &[String]) -> Vec<QueryOutcome> {
        parallel_map(titles, self.settings.workers, |t| self.title_query(t))
    }

    /// Author queries: search, pick the homepage with the ranker and crawl
    /// it for PDFs.
    pub fn run_path2(&self, names: &[String]) -> Vec<QueryOutcome> {
        parallel_map(names, self.settings.workers, |n| self.author_query(n))
    }
}

/// Expected outcome of a fixture run, enumerated from the fixture world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub manifest: Manifest,
    pub intended_targets: usize,
    pub recovered_targets: Vec<String>,
    pub recovered_fraction: f64,
    /// Seed URL to the URLs a depth-limited crawl must request, sorted.
    pub crawl_fetches: BTreeMap<String, Vec<String>>,
    /// Author name to the homepage URL the ranker should pick.
    pub homepages: BTreeMap<String, Option<String>>,
}

impl GroundTruth {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineEval {
    pub manifest_matches: bool,
    pub differences: Vec<String>,
    pub recovered_targets: Vec<String>,
    pub recovered_fraction: f64,
    pub expected_fraction: Option<f64>,
}

/// Targets matched by at least one paper record, in target order.
pub fn recovered_targets(records: &[DocumentRecord], targets: &[Target]) -> Vec<String> {
    let hit: BTreeSet<&str> = records
        .iter()
        .filter(|r| r.is_paper())
        .filter_map(|r| r.matched_target.as_deref())
        .collect();
    targets
        .iter()
        .filter(|t| hit.contains(t.id.as_str()))
        .map(|t| t.id.clone())
        .collect()
}

pub fn evaluate_pipeline(
    manifest: &Manifest,
    records: &[DocumentRecord],
    targets: &[Target],
    truth: Option<&GroundTruth>,
) -> PipelineEval {
    let recovered = recovered_targets(records, targets);
    let fraction = if targets.is_empty() {
        0.0
    } else {
        recovered.len() as f64 / targets.len() as f64
    };
    let mut differences = Vec::new();
    if let Some(t) = truth {
        let got = serde_json::to_value(manifest).expect("manifest serializes");
        let want = serde_json::to_value(&t.manifest).expect("manifest serializes");
        diff_json("manifest", &want, &got, &mut differences);
        if recovered != t.recovered_targets {
            differences.push(format!(
                "recovered targets: expected {:?}, got {:?}",
                t.recovered_targets, recovered
            ));
        }
    }
    PipelineEval {
        manifest_matches: differences.is_empty(),
        differences,
        recovered_targets: recovered,
        recovered_fraction: fraction,
        expected_fraction: truth.map(|t| t.recovered_fraction),
    }
}

fn diff_json(at: &str, want: &serde_json::Value, got: &serde_json::Value, out: &mut Vec<String>) {
    use serde_json::Value;
    match (want, got) {
        (Value::Object(a), Value::Object(b)) => {
            let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
            for k in keys {
                let null = Value::Null;
                diff_json(&format!("{at}.{k}"), a.get(k).unwrap_or(&null), b.get(k).unwrap_or(&null), out);
            }
        }
        _ if want != got => out.push(format!("{at}: expected {want}, got {got}")),
        _ => {}
    }
}

/// Loads labeled homepage data named by the config.
pub fn load_homepage_data(cfg: &PipelineConfig) -> Result<Vec<LabeledPage>> {
    let path = cfg
        .training
        .homepage_data
        .as_ref()
        .ok_or_else(|| Error::Config("training.homepage_data is not configured".into()))?;
    load_labeled_pages(path)
}
