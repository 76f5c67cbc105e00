//! Level-by-level walk of a declared site map, independent of the crawler.

use std::collections::{BTreeMap, BTreeSet};

use searchcrawl::crawler::FetchStatus;
use searchcrawl::crawler::FetchRecord;
use searchcrawl::fixtures::Sitemap;
use url::Url;

pub fn domain(u: &str) -> String {
    let url = Url::parse(u).unwrap();
    let host = url.host_str().unwrap().to_string();
    psl::domain_str(&host).unwrap_or(&host).to_string()
}

#[derive(Debug, PartialEq)]
pub struct Expected {
    pub fetched: BTreeSet<String>,
    pub robots: BTreeSet<String>,
    pub scope: BTreeSet<String>,
}

impl Expected {
    /// Splits crawl records the same way for comparison.
    pub fn from_records(records: &[FetchRecord]) -> Self {
        let pick = |f: &dyn Fn(FetchStatus) -> bool| -> BTreeSet<String> {
            records.iter().filter(|r| f(r.status)).map(|r| r.url.clone()).collect()
        };
        Self {
            fetched: pick(&|s| !matches!(s, FetchStatus::SkippedRobots | FetchStatus::SkippedScope)),
            robots: pick(&|s| s == FetchStatus::SkippedRobots),
            scope: pick(&|s| s == FetchStatus::SkippedScope),
        }
    }
}

pub fn walk(map: &Sitemap, seed: &str, max_depth: u32) -> Expected {
    let home = domain(seed);
    let blocked = |u: &str| {
        let url = Url::parse(u).unwrap();
        map.robots
            .get(url.host_str().unwrap())
            .is_some_and(|ps| ps.iter().any(|p| url.path().starts_with(p.as_str())))
    };
    let mut e = Expected {
        fetched: BTreeSet::new(),
        robots: BTreeSet::new(),
        scope: BTreeSet::new(),
    };
    let mut seen = BTreeSet::from([seed.to_string()]);
    let mut level = vec![seed.to_string()];
    for depth in 0..=max_depth {
        let mut next = Vec::new();
        for u in level {
            if blocked(&u) {
                e.robots.insert(u);
                continue;
            }
            e.fetched.insert(u.clone());
            if depth == max_depth || domain(&u) != home {
                continue;
            }
            let Some(page) = map.pages.get(&u) else { continue };
            if page.content_type != "text/html" {
                continue;
            }
            for l in &page.links {
                if !seen.insert(l.clone()) {
                    continue;
                }
                if domain(l) == home || Url::parse(l).unwrap().path().ends_with(".pdf") {
                    next.push(l.clone());
                } else {
                    e.scope.insert(l.clone());
                }
            }
        }
        level = next;
    }
    e
}

/// Smallest gap between consecutive requests to one host, per host.
pub fn min_gaps(log: impl IntoIterator<Item = (String, u64)>) -> BTreeMap<String, u64> {
    let mut by_host: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for (host, at) in log {
        by_host.entry(host).or_default().push(at);
    }
    by_host
        .into_iter()
        .filter_map(|(h, t)| t.windows(2).map(|w| w[1] - w[0]).min().map(|g| (h, g)))
        .collect()
}
