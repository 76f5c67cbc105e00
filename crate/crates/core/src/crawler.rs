//! Polite, depth-limited breadth-first crawler for harvesting PDFs from
//! homepages.
//!
//! The seed is depth 0. HTML pages are expanded only while their depth is
//! below `max_depth`, so nothing deeper than `max_depth` is ever requested.
//! With the default scope, HTML is followed only inside the seed's
//! registrable domain while `.pdf` links are downloaded from anywhere.

use std::collections::{HashMap, HashSet};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use scraper::{Html, Selector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use url::Url;

use crate::clock::Clock;
use crate::error::{Error, Result};
use crate::urlutil::registrable_domain;

pub const DEFAULT_USER_AGENT: &str = "searchcrawl/0.1 (+https://example.org/searchcrawl-contact)";

/// Resolves `raw` against `base`, keeps only http(s), lowercases scheme and
/// host, drops default ports and fragments and strips a trailing
/// `index.html`.
pub fn canonicalize_url(raw: &str, base: Option<&Url>) -> Result<Url> {
    let raw = raw.trim();
    let parsed = match base {
        Some(b) => b.join(raw),
        None => Url::parse(raw),
    }
    .map_err(|e| Error::invalid_url(raw, e.to_string()))?;
    canonicalize_parsed(parsed).map_err(|reason| Error::invalid_url(raw, reason))
}

fn canonicalize_parsed(mut url: Url) -> std::result::Result<Url, String> {
    if !matches!(url.scheme(), "http" | "https") {
        return Err(format!("unsupported scheme {:?}", url.scheme()));
    }
    if url.host_str().is_none_or(str::is_empty) {
        return Err("missing host".into());
    }
    url.set_fragment(None);
    if let Some(stripped) = url.path().strip_suffix("index.html") {
        if stripped.ends_with('/') {
            let stripped = stripped.to_string();
            url.set_path(&stripped);
        }
    }
    Ok(url)
}

/// Anchor targets in document order, canonicalized and de-duplicated.
/// Unresolvable or non-http(s) hrefs are skipped.
pub fn extract_links(html: &[u8], base: &Url) -> Vec<Url> {
    let doc = Html::parse_document(&String::from_utf8_lossy(html));
    let selector = Selector::parse("a[href]").expect("static selector");
    let mut seen = HashSet::new();
    doc.select(&selector)
        .filter_map(|a| a.value().attr("href"))
        .filter_map(|href| canonicalize_url(href, Some(base)).ok())
        .filter(|u| seen.insert(u.to_string()))
        .collect()
}

pub fn is_pdf_path(url: &Url) -> bool {
    url.path().to_ascii_lowercase().ends_with(".pdf")
}

fn content_type_base(ct: Option<&str>) -> Option<String> {
    ct.map(|c| c.split(';').next().unwrap_or("").trim().to_ascii_lowercase())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrawlScope {
    SameRegistrableDomainHtml,
    Unrestricted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Politeness {
    pub per_host_delay_ms: u64,
    pub max_pages: usize,
    pub obey_robots: bool,
    pub user_agent: String,
}

impl Default for Politeness {
    fn default() -> Self {
        Self {
            per_host_delay_ms: 1000,
            max_pages: 500,
            obey_robots: true,
            user_agent: DEFAULT_USER_AGENT.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlJob {
    pub seeds: Vec<String>,
    pub max_depth: u32,
    pub scope: CrawlScope,
    pub politeness: Politeness,
    pub fetch_timeout_ms: u64,
    /// Concurrent fetches within one BFS level.
    pub workers: usize,
}

impl CrawlJob {
    pub fn new(seeds: Vec<String>) -> Self {
        Self {
            seeds,
            max_depth: 2,
            scope: CrawlScope::SameRegistrableDomainHtml,
            politeness: Politeness::default(),
            fetch_timeout_ms: 10_000,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FetchStatus {
    FetchedHtml,
    FetchedPdf,
    /// Successful response that is neither HTML nor PDF.
    FetchedOther,
    SkippedRobots,
    SkippedScope,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchRecord {
    pub url: String,
    pub seed: String,
    pub depth: u32,
    pub status: FetchStatus,
    pub http_status: Option<u16>,
    pub content_hash: Option<String>,
    pub stored_path: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchResponse {
    pub status: u16,
    pub content_type: Option<String>,
    pub body: Vec<u8>,
}

/// `Err` means no HTTP response was obtained (DNS, connect, timeout).
pub trait HttpFetcher: Send + Sync {
    fn get(&self, url: &Url, timeout_ms: u64) -> Result<FetchResponse>;
}

/// Receives every PDF body and returns where it was stored.
pub trait DocumentSink: Send + Sync {
    fn store_pdf(&self, bytes: &[u8], url: &str, seed: &str) -> Result<String>;
}

/// Discards documents; useful when only the fetch records matter.
#[derive(Debug, Default)]
pub struct NullSink;

impl DocumentSink for NullSink {
    fn store_pdf(&self, bytes: &[u8], _url: &str, _seed: &str) -> Result<String> {
        Ok(format!("memory:{}", sha256_hex(bytes)))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureResponse {
    pub status: u16,
    pub content_type: Option<String>,
    pub body: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestLogEntry {
    pub url: String,
    pub host: String,
    pub at_ms: u64,
}

/// Serves a declared site map or a directory tree laid out as
/// `<root>/<host>/<path>` (`/` and trailing slashes map to `index.html`),
/// logging the clock time of every request.
pub struct FixtureFetcher {
    clock: Arc<dyn Clock>,
    root: Option<PathBuf>,
    pages: HashMap<String, FixtureResponse>,
    failures: HashSet<String>,
    log: Mutex<Vec<RequestLogEntry>>,
}

impl FixtureFetcher {
    pub fn new(clock: Arc<dyn Clock>) -> Self {
        Self {
            clock,
            root: None,
            pages: HashMap::new(),
            failures: HashSet::new(),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn from_dir(root: impl Into<PathBuf>, clock: Arc<dyn Clock>) -> Self {
        Self {
            root: Some(root.into()),
            ..Self::new(clock)
        }
    }

    fn key(url: &str) -> String {
        canonicalize_url(url, None)
            .map(|u| u.to_string())
            .unwrap_or_else(|_| url.to_string())
    }

    pub fn insert(&mut self, url: &str, status: u16, content_type: Option<&str>, body: impl Into<Vec<u8>>) {
        self.pages.insert(
            Self::key(url),
            FixtureResponse {
                status,
                content_type: content_type.map(str::to_string),
                body: body.into(),
            },
        );
    }

    pub fn insert_html(&mut self, url: &str, html: &str) {
        self.insert(url, 200, Some("text/html"), html.as_bytes().to_vec());
    }

    pub fn insert_pdf(&mut self, url: &str, body: impl Into<Vec<u8>>) {
        self.insert(url, 200, Some("application/pdf"), body);
    }

    /// Requests for `url` fail without an HTTP response.
    pub fn insert_network_error(&mut self, url: &str) {
        self.failures.insert(Self::key(url));
    }

    pub fn request_log(&self) -> Vec<RequestLogEntry> {
        self.log.lock().expect("log lock").clone()
    }

    fn from_tree(root: &Path, url: &Url) -> Option<FixtureResponse> {
        let host = match url.port() {
            Some(p) => format!("{}_{p}", url.host_str()?),
            None => url.host_str()?.to_string(),
        };
        let mut rel = url.path().trim_start_matches('/').to_string();
        if rel.is_empty() || rel.ends_with('/') {
            rel.push_str("index.html");
        }
        if rel.split('/').any(|seg| seg == "..") {
            return None;
        }
        let mut path = root.join(host).join(&rel);
        if path.is_dir() {
            path = path.join("index.html");
        }
        let body = std::fs::read(&path).ok()?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        let ct = match ext.as_str() {
            "pdf" => "application/pdf",
            "html" | "htm" => "text/html",
            "txt" => "text/plain",
            "json" => "application/json",
            _ => "application/octet-stream",
        };
        Some(FixtureResponse {
            status: 200,
            content_type: Some(ct.into()),
            body,
        })
    }
}

impl HttpFetcher for FixtureFetcher {
    fn get(&self, url: &Url, _timeout_ms: u64) -> Result<FetchResponse> {
        let key = url.to_string();
        self.log.lock().expect("log lock").push(RequestLogEntry {
            url: key.clone(),
            host: url.host_str().unwrap_or("").to_string(),
            at_ms: self.clock.now_ms(),
        });
        if self.failures.contains(&key) {
            return Err(Error::Backend {
                status: None,
                message: format!("connection refused: {key}"),
            });
        }
        let hit = self
            .pages
            .get(&key)
            .cloned()
            .or_else(|| self.root.as_deref().and_then(|r| Self::from_tree(r, url)));
        Ok(match hit {
            Some(r) => FetchResponse {
                status: r.status,
                content_type: r.content_type,
                body: r.body,
            },
            None => FetchResponse {
                status: 404,
                content_type: Some("text/html".into()),
                body: b"not found".to_vec(),
            },
        })
    }
}

pub const MAX_BODY_BYTES: u64 = 64 * 1024 * 1024;

pub struct LiveFetcher {
    user_agent: String,
}

impl LiveFetcher {
    pub fn new(user_agent: impl Into<String>) -> Self {
        Self {
            user_agent: user_agent.into(),
        }
    }
}

impl HttpFetcher for LiveFetcher {
    fn get(&self, url: &Url, timeout_ms: u64) -> Result<FetchResponse> {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_millis(timeout_ms))
            .user_agent(&self.user_agent)
            .build();
        let resp = match agent.get(url.as_str()).call() {
            Ok(r) => r,
            Err(ureq::Error::Status(_, r)) => r,
            Err(e) => {
                return Err(Error::Backend {
                    status: None,
                    message: e.to_string(),
                })
            }
        };
        let status = resp.status();
        let content_type = resp.header("content-type").map(str::to_string);
        let mut body = Vec::new();
        resp.into_reader()
            .take(MAX_BODY_BYTES)
            .read_to_end(&mut body)
            .map_err(|e| Error::Backend {
                status: Some(status),
                message: format!("reading body: {e}"),
            })?;
        Ok(FetchResponse {
            status,
            content_type,
            body,
        })
    }
}

/// Disallow prefixes applying to one user agent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RobotsRules {
    disallow: Vec<String>,
}

impl RobotsRules {
    pub fn allow_all() -> Self {
        Self::default()
    }

    /// Uses the group naming `user_agent` if there is one, else the `*`
    /// group. Only `Disallow` lines are honored.
    pub fn parse(text: &str, user_agent: &str) -> Self {
        let product = user_agent
            .split(['/', ' '])
            .next()
            .unwrap_or("")
            .to_ascii_lowercase();
        let mut specific: Option<Vec<String>> = None;
        let mut star: Option<Vec<String>> = None;
        let mut agents: Vec<String> = Vec::new();
        let mut rules: Vec<String> = Vec::new();
        let mut in_rules = false;
        let mut flush = |agents: &mut Vec<String>, rules: &mut Vec<String>| {
            for a in agents.iter() {
                if a == "*" {
                    star.get_or_insert_with(Vec::new).extend(rules.iter().cloned());
                } else if !product.is_empty() && product.contains(a.as_str()) {
                    specific.get_or_insert_with(Vec::new).extend(rules.iter().cloned());
                }
            }
            agents.clear();
            rules.clear();
        };
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            let Some((key, value)) = line.split_once(':') else { continue };
            let (key, value) = (key.trim().to_ascii_lowercase(), value.trim());
            match key.as_str() {
                "user-agent" => {
                    if in_rules {
                        flush(&mut agents, &mut rules);
                        in_rules = false;
                    }
                    agents.push(value.to_ascii_lowercase());
                }
                "disallow" => {
                    in_rules = true;
                    if !value.is_empty() {
                        rules.push(value.to_string());
                    }
                }
                _ => in_rules = true,
            }
        }
        flush(&mut agents, &mut rules);
        Self {
            disallow: specific.or(star).unwrap_or_default(),
        }
    }

    pub fn allows(&self, url: &Url) -> bool {
        let mut target = url.path().to_string();
        if let Some(q) = url.query() {
            target.push('?');
            target.push_str(q);
        }
        !self.disallow.iter().any(|p| target.starts_with(p.as_str()))
    }
}

/// Serializes requests per host and keeps consecutive request starts at
/// least `delay_ms` apart.
pub struct HostPacer {
    clock: Arc<dyn Clock>,
    delay_ms: u64,
    hosts: Mutex<HashMap<String, Arc<Mutex<Option<u64>>>>>,
}

impl HostPacer {
    pub fn new(clock: Arc<dyn Clock>, delay_ms: u64) -> Self {
        Self {
            clock,
            delay_ms,
            hosts: Mutex::new(HashMap::new()),
        }
    }

    pub fn delay_ms(&self) -> u64 {
        self.delay_ms
    }

    pub fn run<T>(&self, host: &str, f: impl FnOnce() -> T) -> T {
        let slot = self
            .hosts
            .lock()
            .expect("pacer lock")
            .entry(host.to_string())
            .or_default()
            .clone();
        let mut last = slot.lock().expect("host lock");
        if let Some(prev) = *last {
            self.clock.sleep_until_ms(prev.saturating_add(self.delay_ms));
        }
        *last = Some(self.clock.now_ms());
        f()
    }
}

pub fn host_key(url: &Url) -> String {
    match url.port() {
        Some(p) => format!("{}:{p}", url.host_str().unwrap_or("")),
        None => url.host_str().unwrap_or("").to_string(),
    }
}

struct Crawl<'a> {
    job: &'a CrawlJob,
    fetcher: &'a dyn HttpFetcher,
    sink: &'a dyn DocumentSink,
    pacer: &'a HostPacer,
    robots: Mutex<HashMap<String, Arc<RobotsRules>>>,
}

struct Outcome {
    record: FetchRecord,
    links: Vec<Url>,
}

impl Crawl<'_> {
    fn robots_for(&self, url: &Url) -> Arc<RobotsRules> {
        let key = format!("{}://{}", url.scheme(), host_key(url));
        if let Some(r) = self.robots.lock().expect("robots lock").get(&key) {
            return r.clone();
        }
        let robots_url = Url::parse(&format!("{key}/robots.txt")).expect("valid robots url");
        let resp = self
            .pacer
            .run(&host_key(url), || self.fetcher.get(&robots_url, self.job.fetch_timeout_ms));
        let rules = match resp {
            Ok(r) if (200..300).contains(&r.status) => {
                RobotsRules::parse(&String::from_utf8_lossy(&r.body), &self.job.politeness.user_agent)
            }
            _ => RobotsRules::allow_all(),
        };
        let rules = Arc::new(rules);
        self.robots.lock().expect("robots lock").insert(key, rules.clone());
        rules
    }

    fn fetch(&self, url: &Url, depth: u32, seed: &str, expand: bool) -> Outcome {
        let mut record = FetchRecord {
            url: url.to_string(),
            seed: seed.to_string(),
            depth,
            status: FetchStatus::Error,
            http_status: None,
            content_hash: None,
            stored_path: None,
            error: None,
        };
        let resp = self
            .pacer
            .run(&host_key(url), || self.fetcher.get(url, self.job.fetch_timeout_ms));
        let resp = match resp {
            Ok(r) => r,
            Err(e) => {
                record.error = Some(e.to_string());
                return Outcome { record, links: Vec::new() };
            }
        };
        record.http_status = Some(resp.status);
        if !(200..300).contains(&resp.status) {
            record.error = Some(format!("HTTP {}", resp.status));
            return Outcome { record, links: Vec::new() };
        }
        record.content_hash = Some(sha256_hex(&resp.body));
        let ct = content_type_base(resp.content_type.as_deref());
        let is_pdf = ct.as_deref() == Some("application/pdf") || is_pdf_path(url);
        let is_html = matches!(ct.as_deref(), Some("text/html" | "application/xhtml+xml"));
        let mut links = Vec::new();
        if is_pdf {
            match self.sink.store_pdf(&resp.body, &record.url, seed) {
                Ok(path) => {
                    record.status = FetchStatus::FetchedPdf;
                    record.stored_path = Some(path);
                }
                Err(e) => record.error = Some(format!("store failed: {e}")),
            }
        } else if is_html {
            record.status = FetchStatus::FetchedHtml;
            if expand {
                links = extract_links(&resp.body, url);
            }
        } else {
            record.status = FetchStatus::FetchedOther;
        }
        Outcome { record, links }
    }

    fn in_scope_html(&self, url: &Url, seed_domain: &Option<String>) -> bool {
        match self.job.scope {
            CrawlScope::Unrestricted => true,
            CrawlScope::SameRegistrableDomainHtml => registrable_domain(url) == *seed_domain,
        }
    }

    fn run_level(&self, items: &[(Url, u32, bool)], seed: &str) -> Vec<Outcome> {
        let workers = self.job.workers.clamp(1, items.len().max(1));
        if workers == 1 {
            return items.iter().map(|(u, d, e)| self.fetch(u, *d, seed, *e)).collect();
        }
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<Outcome>>> = items.iter().map(|_| Mutex::new(None)).collect();
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some((u, d, e)) = items.get(i) else { break };
                    *slots[i].lock().expect("slot lock") = Some(self.fetch(u, *d, seed, *e));
                });
            }
        });
        slots
            .into_iter()
            .map(|m| m.into_inner().expect("slot lock").expect("every item fetched"))
            .collect()
    }

    fn crawl_seed(&self, seed: Url, visited: &mut HashSet<String>, out: &mut Vec<FetchRecord>) {
        let seed_str = seed.to_string();
        let seed_domain = registrable_domain(&seed);
        let max_depth = self.job.max_depth;
        let mut budget = self.job.politeness.max_pages;
        visited.insert(seed_str.clone());
        let mut level: Vec<Url> = vec![seed.clone()];
        let mut depth = 0u32;
        while !level.is_empty() && budget > 0 {
            let mut to_fetch = Vec::new();
            for url in level.drain(..) {
                if self.job.politeness.obey_robots && !self.robots_for(&url).allows(&url) {
                    out.push(FetchRecord {
                        url: url.to_string(),
                        seed: seed_str.clone(),
                        depth,
                        status: FetchStatus::SkippedRobots,
                        http_status: None,
                        content_hash: None,
                        stored_path: None,
                        error: None,
                    });
                    continue;
                }
                if to_fetch.len() < budget {
                    let expand = depth < max_depth && self.in_scope_html(&url, &seed_domain);
                    to_fetch.push((url, depth, expand));
                }
            }
            budget -= to_fetch.len();
            let outcomes = self.run_level(&to_fetch, &seed_str);
            let mut next = Vec::new();
            for o in outcomes {
                for link in o.links {
                    let key = link.to_string();
                    if visited.contains(&key) {
                        continue;
                    }
                    visited.insert(key);
                    if self.in_scope_html(&link, &seed_domain) || is_pdf_path(&link) {
                        next.push(link);
                    } else {
                        out.push(FetchRecord {
                            url: link.to_string(),
                            seed: seed_str.clone(),
                            depth: depth + 1,
                            status: FetchStatus::SkippedScope,
                            http_status: None,
                            content_hash: None,
                            stored_path: None,
                            error: None,
                        });
                    }
                }
                out.push(o.record);
            }
            level = next;
            depth += 1;
        }
    }
}

/// Crawls every seed in order, sharing one visited set across the job.
/// Per-URL failures become `error` records; only a job without any valid
/// seed fails as a whole.
pub fn crawl(
    job: &CrawlJob,
    fetcher: &dyn HttpFetcher,
    sink: &dyn DocumentSink,
    clock: Arc<dyn Clock>,
) -> Result<Vec<FetchRecord>> {
    let pacer = HostPacer::new(clock, job.politeness.per_host_delay_ms);
    crawl_paced(job, fetcher, sink, &pacer)
}

/// [`crawl`] with a caller-owned pacer, so politeness holds across jobs
/// that share hosts. The pacer's delay overrides the job's.
pub fn crawl_paced(
    job: &CrawlJob,
    fetcher: &dyn HttpFetcher,
    sink: &dyn DocumentSink,
    pacer: &HostPacer,
) -> Result<Vec<FetchRecord>> {
    let seeds: Vec<Url> = job
        .seeds
        .iter()
        .filter_map(|s| match canonicalize_url(s, None) {
            Ok(u) => Some(u),
            Err(e) => {
                log::warn!("skipping seed: {e}");
                None
            }
        })
        .collect();
    if seeds.is_empty() {
        return Err(Error::invalid("crawl job has no valid seed URL"));
    }
    let c = Crawl {
        job,
        fetcher,
        sink,
        pacer,
        robots: Mutex::new(HashMap::new()),
    };
    let mut visited = HashSet::new();
    let mut out = Vec::new();
    for seed in seeds {
        if visited.contains(seed.as_str()) {
            continue;
        }
        c.crawl_seed(seed, &mut visited, &mut out);
    }
    Ok(out)
}
