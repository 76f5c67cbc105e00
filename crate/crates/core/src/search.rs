//! Query construction and execution against a pluggable search backend.
//!
//! Queries are always phrase-quoted and carry a filetype directive: title
//! queries ask for PDFs, author-name queries ask for HTML pages. Backends
//! return raw hits; [`execute`] turns those into a validated [`ResultPage`]
//! with contiguous ranks.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clock::Clock;
use crate::error::{Error, Result};
use crate::text::collapse_whitespace;
use crate::urlutil::parse_lenient;

pub const DEFAULT_TOP_K: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    Title,
    Author,
}

impl QueryKind {
    fn filetype(self) -> &'static str {
        match self {
            QueryKind::Title => "pdf",
            QueryKind::Author => "html",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub kind: QueryKind,
    pub raw_text: String,
    pub rendered: String,
    pub top_k: usize,
}

impl Query {
    /// `"<title>" filetype:pdf`
    pub fn title(title: &str) -> Result<Self> {
        let text = collapse_whitespace(title);
        if text.is_empty() {
            return Err(Error::invalid("title query is empty"));
        }
        Ok(Self::build(QueryKind::Title, text))
    }

    /// `"<name>" filetype:html`
    pub fn author(name: &str) -> Result<Self> {
        let text = collapse_whitespace(name);
        if text.is_empty() {
            return Err(Error::invalid("author query is empty"));
        }
        if !text
            .split(' ')
            .any(|tok| tok.chars().any(char::is_alphabetic))
        {
            return Err(Error::invalid(format!("author name `{text}` has no alphabetic token")));
        }
        Ok(Self::build(QueryKind::Author, text))
    }

    fn build(kind: QueryKind, text: String) -> Self {
        let rendered = format!("\"{}\" filetype:{}", text, kind.filetype());
        let digest = Sha256::digest(rendered.as_bytes());
        let prefix = match kind {
            QueryKind::Title => "t",
            QueryKind::Author => "a",
        };
        Query {
            id: format!("{prefix}-{}", &hex::encode(digest)[..12]),
            kind,
            raw_text: text,
            rendered,
            top_k: DEFAULT_TOP_K,
        }
    }

    /// Recovers a query from its rendered form.
    pub fn parse_rendered(rendered: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("not a rendered query: `{rendered}`"));
        let rest = rendered.strip_prefix('"').ok_or_else(bad)?;
        let close = rest.rfind('"').ok_or_else(bad)?;
        let (text, tail) = (&rest[..close], rest[close + 1..].trim());
        match tail {
            "filetype:pdf" => Query::title(text),
            "filetype:html" => Query::author(text),
            _ => Err(bad()),
        }
    }

    pub fn with_top_k(mut self, top_k: usize) -> Result<Self> {
        if top_k == 0 {
            return Err(Error::invalid("top_k must be at least 1"));
        }
        self.top_k = top_k;
        Ok(self)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub query_id: String,
    pub rank: u32,
    pub url: String,
    pub page_title: String,
    pub snippet: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultPage {
    pub query: Query,
    pub results: Vec<SearchResult>,
    /// Milliseconds since the Unix epoch.
    pub retrieved_at: u64,
}

impl ResultPage {
    pub fn new(query: Query, results: Vec<SearchResult>, retrieved_at: u64) -> Result<Self> {
        let page = ResultPage {
            query,
            results,
            retrieved_at,
        };
        page.validate()?;
        Ok(page)
    }

    pub fn validate(&self) -> Result<()> {
        if self.results.len() > self.query.top_k {
            return Err(Error::Invariant(format!(
                "{} results exceed top_k={}",
                self.results.len(),
                self.query.top_k
            )));
        }
        for (i, r) in self.results.iter().enumerate() {
            if r.rank as usize != i + 1 {
                return Err(Error::Invariant(format!(
                    "ranks must be contiguous from 1; position {} has rank {}",
                    i + 1,
                    r.rank
                )));
            }
            if r.query_id != self.query.id {
                return Err(Error::Invariant(format!(
                    "result rank {} belongs to query `{}`, not `{}`",
                    r.rank, r.query_id, self.query.id
                )));
            }
            parse_lenient(&r.url)?;
        }
        Ok(())
    }
}

/// A raw hit as returned by a backend or stored in a fixture line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hit {
    pub rank: u32,
    pub url: String,
    pub title: String,
    pub snippet: String,
}

pub trait SearchBackend: Send + Sync {
    fn search(&self, query: &Query) -> Result<Vec<Hit>>;
}

/// Runs `query` and normalizes the hits: sorted by rank, invalid URLs
/// dropped, truncated to `top_k`, re-ranked `1..=n`.
pub fn execute(query: &Query, backend: &dyn SearchBackend, clock: &dyn Clock) -> Result<ResultPage> {
    let mut hits = backend.search(query)?;
    hits.sort_by_key(|h| h.rank);
    let results = hits
        .into_iter()
        .filter(|h| match parse_lenient(&h.url) {
            Ok(_) => true,
            Err(e) => {
                log::warn!("dropping hit for {}: {e}", query.id);
                false
            }
        })
        .take(query.top_k)
        .enumerate()
        .map(|(i, h)| SearchResult {
            query_id: query.id.clone(),
            rank: i as u32 + 1,
            url: h.url,
            page_title: h.title,
            snippet: h.snippet,
        })
        .collect();
    ResultPage::new(query.clone(), results, clock.now_ms())
}

/// One line of a search fixture file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureLine {
    pub q: String,
    pub results: Vec<Hit>,
}

/// Replays recorded result pages keyed by rendered query text.
#[derive(Debug, Clone, Default)]
pub struct FixtureBackend {
    entries: HashMap<String, Vec<Hit>>,
}

impl FixtureBackend {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let reader = BufReader::new(File::open(path)?);
        let mut entries = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: FixtureLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            entries.insert(rec.q, rec.results);
        }
        Ok(Self { entries })
    }

    pub fn from_lines(lines: impl IntoIterator<Item = FixtureLine>) -> Self {
        Self {
            entries: lines.into_iter().map(|l| (l.q, l.results)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl SearchBackend for FixtureBackend {
    fn search(&self, query: &Query) -> Result<Vec<Hit>> {
        self.entries
            .get(&query.rendered)
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("no fixture for query {}", query.rendered)))
    }
}

/// Appends `page` to a fixture file. Later lines for the same query win.
pub fn record_fixture(page: &ResultPage, path: impl AsRef<Path>) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for r in &page.results {
        if !seen.insert(r.rank) {
            return Err(Error::Invariant(format!("duplicate rank {}", r.rank)));
        }
    }
    page.validate()?;
    let line = FixtureLine {
        q: page.query.rendered.clone(),
        results: page
            .results
            .iter()
            .map(|r| Hit {
                rank: r.rank,
                url: r.url.clone(),
                title: r.page_title.clone(),
                snippet: r.snippet.clone(),
            })
            .collect(),
    };
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    let mut buf = serde_json::to_string(&line)?;
    buf.push('\n');
    f.write_all(buf.as_bytes())?;
    Ok(())
}

/// Token bucket shared by every caller of one backend.
#[derive(Debug)]
pub struct RateLimiter {
    capacity: f64,
    per_second: f64,
    state: Mutex<(f64, u64)>,
}

impl RateLimiter {
    pub fn new(queries_per_second: f64, now_ms: u64) -> Self {
        let capacity = queries_per_second.max(1.0);
        Self {
            capacity,
            per_second: queries_per_second,
            state: Mutex::new((capacity, now_ms)),
        }
    }

    fn refill(&self, state: &mut (f64, u64), now: u64) {
        let elapsed = now.saturating_sub(state.1) as f64 / 1000.0;
        state.0 = (state.0 + elapsed * self.per_second).min(self.capacity);
        state.1 = now.max(state.1);
    }

    /// Takes a token or fails with [`Error::Throttled`].
    pub fn try_acquire(&self, clock: &dyn Clock) -> Result<()> {
        let mut state = self.state.lock().expect("rate limiter poisoned");
        self.refill(&mut state, clock.now_ms());
        if state.0 >= 1.0 {
            state.0 -= 1.0;
            Ok(())
        } else {
            Err(Error::Throttled("query rate limit exceeded".into()))
        }
    }

    /// Takes a token, sleeping until one is available.
    pub fn acquire(&self, clock: &dyn Clock) {
        loop {
            let wait_ms = {
                let mut state = self.state.lock().expect("rate limiter poisoned");
                self.refill(&mut state, clock.now_ms());
                if state.0 >= 1.0 {
                    state.0 -= 1.0;
                    return;
                }
                (((1.0 - state.0) / self.per_second) * 1000.0).ceil().max(1.0) as u64
            };
            clock.sleep_ms(wait_ms);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiveConfig {
    pub endpoint: String,
    pub credential: Option<String>,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub queries_per_second: f64,
    pub backoff_base_ms: u64,
    /// When false, an exhausted rate limiter surfaces as [`Error::Throttled`]
    /// instead of blocking.
    pub block_on_rate_limit: bool,
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            credential: None,
            timeout_ms: 10_000,
            max_retries: 3,
            queries_per_second: 3.0,
            backoff_base_ms: 500,
            block_on_rate_limit: true,
        }
    }
}

impl LiveConfig {
    /// Applies `SEARCHCRAWL_SEARCH_*` environment overrides.
    pub fn with_env_overrides(mut self) -> Self {
        let var = |k: &str| std::env::var(format!("SEARCHCRAWL_SEARCH_{k}")).ok();
        if let Some(v) = var("ENDPOINT") {
            self.endpoint = v;
        }
        if let Some(v) = var("CREDENTIAL") {
            self.credential = Some(v);
        }
        if let Some(v) = var("TIMEOUT_MS").and_then(|v| v.parse().ok()) {
            self.timeout_ms = v;
        }
        if let Some(v) = var("MAX_RETRIES").and_then(|v| v.parse().ok()) {
            self.max_retries = v;
        }
        if let Some(v) = var("QPS").and_then(|v| v.parse().ok()) {
            self.queries_per_second = v;
        }
        self
    }
}

/// Response body expected from a live endpoint:
/// `{"results": [{"url": .., "title": .., "snippet": ..}, ...]}` in rank order.
#[derive(Debug, Deserialize)]
struct LiveResponse {
    results: Vec<LiveHit>,
}

#[derive(Debug, Deserialize)]
struct LiveHit {
    url: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    snippet: String,
}

/// HTTPS search API client: one GET per query with `q` and `count`
/// parameters and an optional bearer credential.
pub struct LiveBackend {
    config: LiveConfig,
    agent: ureq::Agent,
    limiter: Arc<RateLimiter>,
    clock: Arc<dyn Clock>,
}

impl LiveBackend {
    pub fn new(config: LiveConfig, clock: Arc<dyn Clock>) -> Result<Self> {
        if config.endpoint.is_empty() {
            return Err(Error::Config("live search backend needs an endpoint".into()));
        }
        if config.queries_per_second <= 0.0 {
            return Err(Error::Config("queries_per_second must be positive".into()));
        }
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build();
        let limiter = Arc::new(RateLimiter::new(config.queries_per_second, clock.now_ms()));
        Ok(Self {
            config,
            agent,
            limiter,
            clock,
        })
    }

    pub fn limiter(&self) -> Arc<RateLimiter> {
        Arc::clone(&self.limiter)
    }

    fn attempt(&self, query: &Query) -> std::result::Result<Vec<Hit>, (bool, Error)> {
        let mut req = self
            .agent
            .get(&self.config.endpoint)
            .query("q", &query.rendered)
            .query("count", &query.top_k.to_string());
        if let Some(cred) = &self.config.credential {
            req = req.set("Authorization", &format!("Bearer {cred}"));
        }
        match req.call() {
            Ok(resp) => {
                let body: LiveResponse = resp
                    .into_string()
                    .map_err(|e| e.to_string())
                    .and_then(|b| serde_json::from_str(&b).map_err(|e| e.to_string()))
                    .map_err(|e| {
                    (
                        false,
                        Error::Backend {
                            status: Some(200),
                            message: format!("malformed response: {e}"),
                        },
                    )
                })?;
                Ok(body
                    .results
                    .into_iter()
                    .enumerate()
                    .map(|(i, h)| Hit {
                        rank: i as u32 + 1,
                        url: h.url,
                        title: h.title,
                        snippet: h.snippet,
                    })
                    .collect())
            }
            Err(ureq::Error::Status(429, _)) => Err((
                true,
                Error::Throttled(format!("endpoint returned 429 for {}", query.id)),
            )),
            Err(ureq::Error::Status(code, resp)) => {
                let message = resp.into_string().unwrap_or_default();
                Err((
                    code >= 500,
                    Error::Backend {
                        status: Some(code),
                        message,
                    },
                ))
            }
            Err(ureq::Error::Transport(t)) => Err((
                true,
                Error::Backend {
                    status: None,
                    message: t.to_string(),
                },
            )),
        }
    }
}

impl SearchBackend for LiveBackend {
    fn search(&self, query: &Query) -> Result<Vec<Hit>> {
        if self.config.block_on_rate_limit {
            self.limiter.acquire(self.clock.as_ref());
        } else {
            self.limiter.try_acquire(self.clock.as_ref())?;
        }
        let mut attempt = 0;
        loop {
            match self.attempt(query) {
                Ok(hits) => return Ok(hits),
                Err((retryable, err)) => {
                    if !retryable || attempt >= self.config.max_retries {
                        return Err(err);
                    }
                    let backoff = self.config.backoff_base_ms.saturating_mul(1 << attempt.min(16));
                    log::debug!("retrying {} after {backoff}ms: {err}", query.id);
                    self.clock.sleep_ms(backoff);
                    attempt += 1;
                }
            }
        }
    }
}

/// Convenience for callers that pick a backend from configuration.
pub enum BackendChoice {
    Fixture(PathBuf),
    Live(LiveConfig),
}

pub fn open_backend(choice: BackendChoice, clock: Arc<dyn Clock>) -> Result<Box<dyn SearchBackend>> {
    Ok(match choice {
        BackendChoice::Fixture(path) => Box::new(FixtureBackend::load(path)?),
        BackendChoice::Live(cfg) => Box::new(LiveBackend::new(cfg, clock)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::SimulatedClock;

    fn blitzer_fixture() -> FixtureBackend {
        let urls = [
            "research.google.com/pubs/author14735.html",
            "john.blitzer.com",
            "https://www.linkedin.com/pub/john-blitzer/5/606/425",
            "http://dblp.uni-trier.de/pers/hd/b/Blitzer:John",
        ];
        FixtureBackend::from_lines([FixtureLine {
            q: "\"John Blitzer\" filetype:html".into(),
            results: urls
                .iter()
                .enumerate()
                .map(|(i, u)| Hit {
                    rank: i as u32 + 1,
                    url: u.to_string(),
                    title: String::new(),
                    snippet: String::new(),
                })
                .collect(),
        }])
    }

    #[test]
    fn title_query_rendering() {
        let q = Query::title("Maximum Satisfiability using Cores and Correction Sets").unwrap();
        assert_eq!(
            q.rendered,
            "\"Maximum Satisfiability using Cores and Correction Sets\" filetype:pdf"
        );
        assert_eq!(q.kind, QueryKind::Title);
        assert_eq!(q.top_k, 10);
        assert_eq!(Query::title("  A  B ").unwrap().rendered, "\"A B\" filetype:pdf");
        assert!(matches!(Query::title(""), Err(Error::InvalidInput(_))));
        assert!(matches!(Query::title(" \t "), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn author_query_rendering() {
        let q = Query::author("John Blitzer").unwrap();
        assert_eq!(q.rendered, "\"John Blitzer\" filetype:html");
        assert_eq!(q.kind, QueryKind::Author);
        let q = Query::author("Nikolaj Bjorner").unwrap();
        assert!(q.rendered.starts_with("\"Nikolaj Bjorner\""));
        assert!(matches!(Query::author("123"), Err(Error::InvalidInput(_))));
        assert!(matches!(Query::author(""), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rendered_round_trip() {
        let q = Query::title("Some  Title").unwrap();
        assert_eq!(Query::parse_rendered(&q.rendered).unwrap(), q);
        let q = Query::author("Ada Lovelace").unwrap();
        assert_eq!(Query::parse_rendered(&q.rendered).unwrap(), q);
        assert!(Query::parse_rendered("no quotes").is_err());
        assert!(Query::parse_rendered("\"x\" filetype:doc").is_err());
    }

    #[test]
    fn fixture_execute_blitzer() {
        let clock = SimulatedClock::default();
        let q = Query::author("John Blitzer").unwrap();
        let page = execute(&q, &blitzer_fixture(), &clock).unwrap();
        assert_eq!(page.results.len(), 4);
        assert_eq!(
            page.results.iter().map(|r| r.rank).collect::<Vec<_>>(),
            vec![1, 2, 3, 4]
        );
        assert_eq!(page.results[1].url, "john.blitzer.com");
    }

    #[test]
    fn fixture_unknown_query() {
        let clock = SimulatedClock::default();
        let q = Query::author("Nobody Here").unwrap();
        assert!(matches!(
            execute(&q, &blitzer_fixture(), &clock),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn fixture_truncates_to_top_k() {
        let q = Query::title("ten results").unwrap();
        let backend = FixtureBackend::from_lines([FixtureLine {
            q: q.rendered.clone(),
            results: (1..=10)
                .map(|i| Hit {
                    rank: i,
                    url: format!("http://x{i}.org/p.pdf"),
                    title: String::new(),
                    snippet: String::new(),
                })
                .collect(),
        }]);
        let q = q.with_top_k(3).unwrap();
        let page = execute(&q, &backend, &SimulatedClock::default()).unwrap();
        assert_eq!(page.results.len(), 3);
        assert_eq!(page.results[2].url, "http://x3.org/p.pdf");
    }

    #[test]
    fn execute_renumbers_gaps_and_drops_bad_urls() {
        let q = Query::title("gappy").unwrap();
        let hit = |rank, url: &str| Hit {
            rank,
            url: url.into(),
            title: String::new(),
            snippet: String::new(),
        };
        let backend = FixtureBackend::from_lines([FixtureLine {
            q: q.rendered.clone(),
            results: vec![hit(7, "http://c.org/"), hit(2, "http:///"), hit(3, "http://b.org/")],
        }]);
        let page = execute(&q, &backend, &SimulatedClock::default()).unwrap();
        let urls: Vec<_> = page.results.iter().map(|r| (r.rank, r.url.as_str())).collect();
        assert_eq!(urls, vec![(1, "http://b.org/"), (2, "http://c.org/")]);
    }

    #[test]
    fn record_then_replay_round_trip_and_last_wins() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fx.jsonl");
        let clock = SimulatedClock::default();
        let q = Query::author("John Blitzer").unwrap();
        let page = execute(&q, &blitzer_fixture(), &clock).unwrap();
        record_fixture(&page, &path).unwrap();
        let replayed = execute(&q, &FixtureBackend::load(&path).unwrap(), &clock).unwrap();
        assert_eq!(replayed, page);

        let mut second = page.clone();
        second.results.truncate(1);
        record_fixture(&second, &path).unwrap();
        let replayed = execute(&q, &FixtureBackend::load(&path).unwrap(), &clock).unwrap();
        assert_eq!(replayed, second);
    }

    #[test]
    fn record_rejects_duplicate_ranks() {
        let dir = tempfile::tempdir().unwrap();
        let clock = SimulatedClock::default();
        let q = Query::author("John Blitzer").unwrap();
        let mut page = execute(&q, &blitzer_fixture(), &clock).unwrap();
        page.results[1].rank = 1;
        let err = record_fixture(&page, dir.path().join("fx.jsonl")).unwrap_err();
        assert!(matches!(err, Error::Invariant(_)));
    }

    #[test]
    fn malformed_fixture_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fx.jsonl");
        std::fs::write(&path, "{\"q\":\"a\",\"results\":[]}\n{oops\n").unwrap();
        match FixtureBackend::load(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rate_limiter_paces_and_throttles() {
        let clock = SimulatedClock::new(0);
        let limiter = RateLimiter::new(3.0, 0);
        for _ in 0..3 {
            limiter.try_acquire(&clock).unwrap();
        }
        assert!(matches!(limiter.try_acquire(&clock), Err(Error::Throttled(_))));
        limiter.acquire(&clock);
        assert!(clock.now_ms() >= 333);
    }
}
