mod common;

use std::sync::Arc;

use common::{serve, Reply};
use searchcrawl::clock::{Clock, SimulatedClock};
use searchcrawl::crawler::{HttpFetcher, LiveFetcher};
use searchcrawl::error::Error;
use searchcrawl::search::{execute, LiveBackend, LiveConfig, Query, SearchBackend};

const BODY: &str = r#"{"results": [
    {"url": "www.cs.jhu.edu/~blitzer/", "title": "John Blitzer", "snippet": "home page"},
    {"url": "dblp.org/pers/b/Blitzer:John", "title": "dblp: John Blitzer"}
]}"#;

fn config(base: &str) -> LiveConfig {
    LiveConfig {
        endpoint: format!("{base}/search"),
        credential: Some("secret".into()),
        max_retries: 2,
        backoff_base_ms: 250,
        queries_per_second: 1000.0,
        ..LiveConfig::default()
    }
}

#[test]
fn retries_a_server_error_then_succeeds() {
    let server = serve(|_, n| {
        if n == 0 {
            Reply::new(503, "text/plain", "busy")
        } else {
            Reply::new(200, "application/json", BODY)
        }
    });
    let clock = Arc::new(SimulatedClock::new(0));
    let backend = LiveBackend::new(config(&server.base), clock.clone()).unwrap();
    let query = Query::author("John Blitzer").unwrap();
    let page = execute(&query, &backend, clock.as_ref()).unwrap();
    assert_eq!(page.results.len(), 2);
    assert_eq!(page.results[0].rank, 1);
    assert_eq!(page.results[1].url, "dblp.org/pers/b/Blitzer:John");
    assert_eq!(page.results[1].snippet, "");
    // One backoff of the base delay between the two attempts.
    assert_eq!(clock.now_ms(), 250);

    let seen = server.seen.lock().unwrap();
    assert_eq!(seen.len(), 2);
    let target = &seen[1].target;
    assert!(target.starts_with("/search?"), "{target}");
    assert!(target.contains("count=10"), "{target}");
    assert!(target.contains("filetype%3Ahtml"), "{target}");
    assert_eq!(seen[1].header("authorization"), Some("Bearer secret"));
}

#[test]
fn persistent_throttling_surfaces_as_throttled() {
    let server = serve(|_, _| Reply::new(429, "text/plain", "slow down"));
    let clock = Arc::new(SimulatedClock::new(0));
    let backend = LiveBackend::new(config(&server.base), clock).unwrap();
    let err = backend.search(&Query::title("Some Title").unwrap()).unwrap_err();
    assert!(matches!(err, Error::Throttled(_)), "{err:?}");
    assert!(err.is_backend_error());
    assert_eq!(server.seen.lock().unwrap().len(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let server = serve(|_, _| Reply::new(403, "text/plain", "bad key"));
    let backend = LiveBackend::new(config(&server.base), Arc::new(SimulatedClock::new(0))).unwrap();
    let err = backend.search(&Query::title("Some Title").unwrap()).unwrap_err();
    assert!(matches!(err, Error::Backend { status: Some(403), .. }), "{err:?}");
    assert_eq!(server.seen.lock().unwrap().len(), 1);
}

#[test]
fn malformed_body_is_a_backend_error() {
    let server = serve(|_, _| Reply::new(200, "application/json", "{\"hits\": 3}"));
    let backend = LiveBackend::new(config(&server.base), Arc::new(SimulatedClock::new(0))).unwrap();
    let err = backend.search(&Query::title("Some Title").unwrap()).unwrap_err();
    assert!(matches!(err, Error::Backend { status: Some(200), .. }), "{err:?}");
}

#[test]
fn empty_endpoint_is_a_config_error() {
    let err = LiveBackend::new(LiveConfig::default(), Arc::new(SimulatedClock::new(0))).err().unwrap();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn live_fetcher_reports_status_type_and_body() {
    let server = serve(|target, _| match target {
        "/paper.pdf" => Reply::new(200, "application/pdf", b"%PDF-1.4 x".to_vec()),
        _ => Reply::new(404, "text/html", "<p>gone</p>"),
    });
    let fetcher = LiveFetcher::new("searchcrawl-test");
    let ok = fetcher.get(&format!("{}/paper.pdf", server.base).parse().unwrap(), 2000).unwrap();
    assert_eq!(ok.status, 200);
    assert_eq!(ok.content_type.as_deref(), Some("application/pdf"));
    assert_eq!(ok.body, b"%PDF-1.4 x");
    let missing = fetcher.get(&format!("{}/nope", server.base).parse().unwrap(), 2000).unwrap();
    assert_eq!(missing.status, 404);
    assert_eq!(server.seen.lock().unwrap()[0].header("user-agent"), Some("searchcrawl-test"));
}
