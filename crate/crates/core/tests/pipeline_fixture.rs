mod common;

use std::collections::BTreeSet;
use std::path::Path;

use common::run::Run;
use searchcrawl::crawler::FetchStatus;
use searchcrawl::fixtures::FixtureSpec;

fn small_spec() -> FixtureSpec {
    FixtureSpec {
        n_documents: 160,
        ..FixtureSpec::default()
    }
}

fn run(dir: &Path) -> Run {
    common::run::run(&small_spec(), dir)
}

#[test]
fn fixture_run_matches_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(dir.path());
    for o in r.outcomes.iter().filter(|o| o.path == searchcrawl::store::AcquisitionPath::Path2Crawl) {
        let Some(truth) = r.truth.homepages.get(&o.text) else {
            panic!("no ground truth for {}", o.text);
        };
        if truth.is_none() {
            // Without a true homepage any pick is a distractor with no PDFs.
            assert_eq!(o.pdfs, 0, "{}", o.text);
            continue;
        }
        assert_eq!(truth, &o.seed, "{}", o.text);
        if let Some(seed) = &o.seed {
            let fetched: BTreeSet<String> = o
                .fetches
                .iter()
                .filter(|f| !matches!(f.status, FetchStatus::SkippedRobots | FetchStatus::SkippedScope))
                .map(|f| f.url.clone())
                .collect();
            let expected: BTreeSet<String> = r.truth.crawl_fetches[seed].iter().cloned().collect();
            assert_eq!(fetched, expected, "{seed}");
            assert!(o.fetches.iter().all(|f| f.depth <= 2));
        }
    }
    assert!(r.eval.manifest_matches, "{:?}", r.eval.differences);
    assert_eq!(Some(r.eval.recovered_fraction), r.eval.expected_fraction);
    assert_eq!(r.manifest, r.truth.manifest);
    let m = &r.manifest;
    assert_eq!(
        m.combined_unique_titles,
        m.path1.unique_titles + m.path2.unique_titles - m.overlap_unique_titles
    );
}

#[test]
fn fixture_runs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run(a.path());
    let rb = run(b.path());
    assert_eq!(ra.manifest, rb.manifest);
    assert_eq!(ra.ledger, rb.ledger);
}
