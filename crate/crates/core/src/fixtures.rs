//! Deterministic fixture generator.
//!
//! Everything is a pure function of [`FixtureSpec`]; each section draws from
//! its own ChaCha8 stream so changing one section's size does not reshuffle
//! the others. Output layout:
//!
//! ```text
//! fixture_spec.json
//! pipeline.toml                 config wiring everything below together
//! homepage/labeled.jsonl        labeled author-query result pages
//! classifier/documents.jsonl    labeled pre-extracted documents
//! pipeline/targets.json         intended titles with authors
//! pipeline/titles.txt           Path 1 queries
//! pipeline/authors.txt          Path 2 queries
//! pipeline/search.jsonl         search fixture for both paths
//! pipeline/ground_truth.json    expected manifest, crawl sets, homepages
//! web/<host>/<path>             servable mini-web
//! web/sitemap.json              link graph and robots rules of the mini-web
//! ```
//!
//! The ground truth is enumerated from the generator's own world model
//! (which page links where, which copy carries which title and authors),
//! not by running the crawler or the store.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::doc::NormalizedDocument;
use crate::error::Result;
use crate::features::{LabeledHit, LabeledQueryLine};
use crate::pipeline::{DocKind, GroundTruth, LabeledDocument};
use crate::search::{FixtureLine, Hit, Query};
use crate::store::{Manifest, PathManifest, Target};
use crate::text::{compact_key, normalize_phrase};

/// Per-query and per-document perturbations of the generated data.
///
/// Homepage queries: each author gets one true homepage and
/// `results_per_query - 1` distractors drawn from profile, bibliography,
/// social, news and directory sites, many of which carry the name in the
/// URL. Each query falls in one of four regimes:
///
/// * `homepage_without_name`: the homepage sits at an opaque id path and is
///   titled only with the name; the other results are pages about the
///   author on unrelated hosts, so the name is in every URL but the
///   homepage's.
/// * `shared_academic_vocab`: a prominent researcher; every distractor
///   snippet quotes homepage-style bio text, as aggregator sites do.
/// * `obscure_author`: the homepage has a bare title and snippet and the
///   other results are directory listings.
/// * otherwise an ordinary mix whose share of name-bearing distractors is
///   drawn per query.
///
/// Independently of the regime:
///
/// * `generic_homepage_title`: the homepage title is only the name.
/// * `namesake_homepage`: a homepage of someone sharing the surname is
///   among the distractors.
/// * `own_subpage`: the author's own publications page (same site, name
///   in URL) is among the distractors.
///
/// Documents: with probability `document` a classifier document is drawn
/// from the wide variant of its kind (odd page counts, missing or
/// misleading headings, stray signal phrases).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    pub homepage_without_name: f64,
    pub generic_homepage_title: f64,
    pub namesake_homepage: f64,
    pub own_subpage: f64,
    pub shared_academic_vocab: f64,
    pub obscure_author: f64,
    pub document: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            homepage_without_name: 0.12,
            generic_homepage_title: 0.25,
            namesake_homepage: 0.2,
            own_subpage: 0.3,
            shared_academic_vocab: 0.35,
            obscure_author: 0.15,
            document: 0.35,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixtureSpec {
    pub seed: u64,
    pub n_authors: usize,
    pub results_per_query: usize,
    pub n_documents: usize,
    pub paper_fraction: f64,
    pub n_pipeline_authors: usize,
    pub papers_per_author: usize,
    pub noise: NoiseSpec,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            n_authors: 200,
            results_per_query: 10,
            n_documents: 400,
            paper_fraction: 0.5,
            n_pipeline_authors: 12,
            papers_per_author: 4,
            noise: NoiseSpec::default(),
        }
    }
}

const FIRST: &[&str] = &[
    "John", "Soumen", "Ada", "Maria", "Wei", "Priya", "Lars", "Elena", "Hiroshi", "Fatima", "Carlos", "Anna",
    "David", "Mei", "Ahmed", "Sofia", "Rahul", "Julia", "Tomas", "Aisha", "Kenji", "Laura", "Omar", "Ingrid",
    "Pablo", "Chen", "Nadia", "Viktor", "Grace", "Rajesh", "Emma", "Yusuf", "Clara", "Dmitri", "Leila", "Marco",
    "Sara", "Jin", "Olga", "Felix", "Ravi", "Hannah", "Luis", "Zara", "Peter", "Amara", "Stefan", "Noor",
    "Miguel", "Ines", "Arjun", "Keiko", "Tariq", "Lucia", "Bjorn", "Ana", "Hugo", "Yuki", "Pedro", "Nina",
];

const LAST: &[&str] = &[
    "Blitzer", "Chakrabarti", "Lovelace", "Garcia", "Zhang", "Patel", "Larsen", "Petrova", "Tanaka", "Hassan",
    "Mendes", "Kowalski", "Smith", "Li", "Novak", "Rossi", "Sharma", "Fischer", "Nguyen", "Okafor", "Ivanova",
    "Moreau", "Kim", "Schmidt", "Silva", "Haddad", "Johansson", "Costa", "Wu", "Andersson", "Rahman", "Keller",
    "Lopez", "Morales", "Yamamoto", "Bianchi", "Ng", "Weber", "Duarte", "Kaur", "Popescu", "Horvath", "Hughes",
    "Nakamura", "Ferrari", "Sato", "Jensen", "Murphy", "Dubois", "Gupta", "Romano", "Svensson", "Khan", "Reyes",
    "Ortiz", "Berg", "Fontaine", "Varga", "Lindqvist", "Mwangi", "Abe", "Cohen", "Ito", "Baker", "Roth", "Kovac",
    "Hoffmann", "Park", "Brennan", "Osei", "Quinn", "Vogel", "Marino", "Dalton", "Ueda", "Castro", "Falk",
    "Okoye", "Sorensen", "Ahn",
];

const UNIS: &[(&str, &str)] = &[
    ("Carnegie Mellon University", "cmu.edu"),
    ("University of Toronto", "utoronto.ca"),
    ("IIT Bombay", "iitb.ac.in"),
    ("University of Edinburgh", "ed.ac.uk"),
    ("ETH Zurich", "ethz.ch"),
    ("University of Melbourne", "unimelb.edu.au"),
    ("Tsinghua University", "tsinghua.edu.cn"),
    ("UNSW Sydney", "unsw.edu.au"),
    ("Penn State University", "psu.edu"),
    ("University of Washington", "washington.edu"),
    ("Georgia Tech", "gatech.edu"),
    ("TU Munich", "tum.de"),
    ("KAIST", "kaist.ac.kr"),
    ("University of Tokyo", "u-tokyo.ac.jp"),
    ("EPFL", "epfl.ch"),
    ("University College London", "ucl.ac.uk"),
    ("Rice University", "rice.edu"),
    ("University of Amsterdam", "uva.nl"),
    ("Seoul National University", "snu.ac.kr"),
    ("University of Cape Town", "uct.ac.za"),
    ("McGill University", "mcgill.ca"),
    ("Sapienza University of Rome", "uniroma1.it"),
    ("KTH Royal Institute of Technology", "kth.se"),
    ("University of Sao Paulo", "usp.br"),
];

const DEPTS: &[&str] = &["cs", "eecs", "cse", "informatik", "math", "ece"];

const TOPICS: &[&str] = &[
    "machine learning", "information retrieval", "databases", "computer vision", "natural language processing",
    "distributed systems", "computer security", "programming languages", "data mining", "robotics",
    "computational biology", "human-computer interaction", "theory of computation", "computer networks",
    "operating systems", "web search", "graph algorithms", "formal verification",
];

const CONFS: &[&str] = &["sigir", "kdd", "icml", "vldb", "www", "acl", "cvpr", "osdi", "nips", "chi", "jcdl", "cikm"];

const ADJ: &[&str] = &[
    "Efficient", "Scalable", "Robust", "Adaptive", "Probabilistic", "Distributed", "Incremental", "Sparse",
    "Hierarchical", "Interactive", "Federated", "Approximate", "Secure", "Neural", "Bayesian", "Declarative",
    "Streaming", "Causal", "Multilingual", "Compositional",
];

const NOUN: &[&str] = &[
    "Indexing", "Ranking", "Retrieval", "Inference", "Clustering", "Embeddings", "Query Processing", "Crawling",
    "Classification", "Summarization", "Caching", "Scheduling", "Verification", "Segmentation", "Replication",
    "Compression", "Parsing", "Alignment", "Visualization", "Optimization",
];

const DOMAINS: &[&str] = &[
    "Digital Libraries", "Web Archives", "Sensor Networks", "Knowledge Graphs", "Scientific Workflows",
    "Social Media", "Code Search", "Medical Records", "Question Answering", "Recommender Systems",
    "Edge Devices", "Citation Graphs", "Video Streams", "Legal Documents", "Time Series",
];

/// Body-text vocabulary. Deliberately free of heading words and signal
/// phrases so those appear only where a generator places them.
const WORDS: &[&str] = &[
    "the", "of", "and", "we", "to", "a", "in", "is", "for", "that", "on", "with", "as", "by", "our", "are",
    "model", "data", "results", "method", "approach", "performance", "set", "query", "queries", "documents",
    "system", "evaluation", "training", "features", "algorithm", "accuracy", "baseline", "large", "each",
    "number", "time", "two", "over", "which", "from", "these", "can", "show", "proposed", "analysis", "based",
    "learning", "ranking", "index", "table", "figure", "section", "similar", "between", "while", "using",
    "experiments", "dataset", "error", "cost", "scale", "graph", "nodes", "users", "search", "precision",
    "recall", "weights", "vector", "function", "problem", "structure", "sample", "random", "linear",
];

const SECTIONS: &[&str] = &[
    "Related Work", "Background", "Problem Definition", "Method", "Approach", "System Design", "Experiments",
    "Evaluation", "Results", "Discussion", "Limitations", "Conclusion",
];

#[derive(Debug, Clone, PartialEq, Eq)]
struct Person {
    first: String,
    last: String,
    uni: usize,
}

impl Person {
    fn name(&self) -> String {
        format!("{} {}", self.first, self.last)
    }
    fn f(&self) -> String {
        self.first.to_lowercase()
    }
    fn l(&self) -> String {
        self.last.to_lowercase()
    }
    fn uni_name(&self) -> &'static str {
        UNIS[self.uni].0
    }
    fn dom(&self) -> &'static str {
        UNIS[self.uni].1
    }
}

fn stream(seed: u64, section: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(section);
    rng
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[rng.gen_range(0..items.len())]
}

fn chance(rng: &mut ChaCha8Rng, p: f64) -> bool {
    rng.gen::<f64>() < p
}

fn digits(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n).map(|_| char::from(b'0' + rng.gen_range(0..10u8))).collect()
}

fn fill(template: &str, p: &Person) -> String {
    template
        .replace("{F}", &p.first)
        .replace("{L}", &p.last)
        .replace("{f}", &p.f())
        .replace("{l}", &p.l())
        .replace("{U}", p.uni_name())
        .replace("{dom}", p.dom())
}

fn distinct_people(rng: &mut ChaCha8Rng, n: usize, taken: &mut BTreeSet<String>) -> Vec<Person> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = Person {
            first: pick(rng, FIRST).to_string(),
            last: pick(rng, LAST).to_string(),
            uni: rng.gen_range(0..UNIS.len()),
        };
        if taken.insert(p.name()) {
            out.push(p);
        }
        if taken.len() >= FIRST.len() * LAST.len() {
            break;
        }
    }
    out
}

fn homepage_url(rng: &mut ChaCha8Rng, p: &Person, opaque: bool) -> String {
    let dept = pick(rng, DEPTS);
    if opaque {
        return if chance(rng, 0.5) {
            format!("www.{}/~u{}/", p.dom(), digits(rng, 5))
        } else {
            format!("www.{dept}.{}/people/profile.php?id={}", p.dom(), digits(rng, 4))
        };
    }
    match rng.gen_range(0..6) {
        0 => format!("www.cs.{}/~{}/", p.dom(), p.l()),
        1 => format!("www.{}{}.com", p.f(), p.l()),
        2 => format!("people.{dept}.{}/{}.{}/", p.dom(), p.f(), p.l()),
        3 => format!("www.{}/staff/{}-{}/index.html", p.dom(), p.f(), p.l()),
        4 => format!("{dept}.{}/people/faculty/{}/", p.dom(), p.l()),
        _ => format!("https://{}{}.github.io/", p.f(), p.l()),
    }
}

const HOME_TITLES: &[&str] = &[
    "{F} {L}'s Home Page",
    "{F} {L} - Homepage",
    "Home Page of {F} {L}",
    "Prof. {F} {L}",
    "{F} {L} | {U}",
    "{F} {L}'s Homepage",
];

const HOME_SNIPPETS: &[&str] = &[
    "I am an associate professor in the Department of Computer Science at {U}.",
    "Welcome to my home page.",
    "My research interests include {T} and {T2}.",
    "I lead the {T} group at {U}.",
    "Publications, teaching, students and contact information.",
    "I am a professor of computer science.",
    "Office hours, CV and recent papers.",
];

fn home_snippet(rng: &mut ChaCha8Rng, p: &Person) -> String {
    let mut parts: Vec<&str> = HOME_SNIPPETS.to_vec();
    parts.shuffle(rng);
    parts[..2]
        .iter()
        .map(|s| fill(s, p).replace("{T2}", pick(rng, TOPICS)).replace("{T}", pick(rng, TOPICS)))
        .collect::<Vec<_>>()
        .join(" ")
}

type Distractor = fn(&mut ChaCha8Rng, &Person) -> (String, String, String);

/// Self-written profile text, as found on social and code-hosting sites.
fn bio(rng: &mut ChaCha8Rng, p: &Person) -> String {
    if chance(rng, 0.5) {
        format!(" {}", home_snippet(rng, p))
    } else {
        String::new()
    }
}

/// Distractors whose URL carries the author's name.
const NAMED_DISTRACTORS: &[Distractor] = &[
    |rng, p| {
        (
            fill(&format!("https://www.linkedin.com/in/{{f}}-{{l}}-{}", digits(rng, 3)), p),
            fill("{F} {L} | LinkedIn", p),
            fill("View {F} {L}'s professional profile on LinkedIn.", p) + &bio(rng, p),
        )
    },
    |_rng, p| {
        (
            format!("dblp.uni-trier.de/pers/hd/{}/{}:{}", &p.l()[..1], p.last, p.first),
            fill("dblp: {F} {L}", p),
            fill("List of computer science publications by {F} {L}.", p),
        )
    },
    |rng, p| {
        (
            fill("www.researchgate.net/profile/{F}_{L}", p),
            fill("{F} {L} | {U} | ResearchGate", p),
            format!("{} of {}. Read {} publications and contact on ResearchGate.", p.name(), p.uni_name(), rng.gen_range(5..200)),
        )
    },
    |rng, p| {
        (
            fill(&format!("www.facebook.com/{{f}}.{{l}}.{}", digits(rng, 2)), p),
            fill("{F} {L} | Facebook", p),
            fill("{F} {L} is on Facebook. Join Facebook to connect with {F} {L} and others you may know.", p) + &bio(rng, p),
        )
    },
    |rng, p| {
        (
            format!("twitter.com/{}{}{}", p.f(), &p.l()[..1], digits(rng, 2)),
            fill("{F} {L} (@{f}) | Twitter", p),
            fill("The latest Tweets from {F} {L}.", p) + &bio(rng, p),
        )
    },
    |rng, p| {
        (
            format!("www.{}.com/{}/0{}/{}-wins-award.html", pick(rng, &["dailynews", "techherald", "campusreport"]), rng.gen_range(2008..2016), rng.gen_range(1..10), p.l()),
            fill("{U} researcher {F} {L} wins award", p),
            fill("{F} {L} was honored this week for contributions to the field.", p),
        )
    },
    |rng, p| {
        (
            fill("en.wikipedia.org/wiki/{F}_{L}", p),
            fill("{F} {L} - Wikipedia", p),
            format!("{} (born {}) is a computer scientist.", p.name(), rng.gen_range(1950..1985)),
        )
    },
    |rng, p| {
        (
            fill("github.com/{f}{l}", p),
            fill("{f}{l} ({F} {L}) · GitHub", p),
            fill("{f}{l} has 23 repositories available. Follow their code on GitHub.", p) + &bio(rng, p),
        )
    },
];

/// Distractors under opaque ids or listing pages.
const ANON_DISTRACTORS: &[Distractor] = &[
    |rng, p| {
        (
            format!("scholar.google.com/citations?user={}", digits(rng, 10)),
            fill("{F} {L} - Google Scholar Citations", p),
            format!("{} - Cited by {} - {} - {}", p.uni_name(), rng.gen_range(50..9000), pick(rng, TOPICS), pick(rng, TOPICS)),
        )
    },
    |rng, p| {
        (
            format!("www.{}.{}/people/faculty.html", pick(rng, DEPTS), p.dom()),
            fill("Faculty | Department of Computer Science | {U}", p),
            fill("Faculty directory. {F} {L}, Associate Professor.", p),
        )
    },
    |rng, p| {
        let conf = pick(rng, CONFS);
        let year = rng.gen_range(2010..2016);
        (
            format!("www.{conf}{year}.org/committee.html"),
            format!("Program Committee - {} {year}", conf.to_uppercase()),
            format!("Program committee members include {} ({}).", p.name(), p.uni_name()),
        )
    },
    |_, p| {
        (
            fill("www.amazon.com/s?k={f}+{l}", p),
            fill("Amazon.com: {F} {L}: Books", p),
            fill("Online shopping for books by {F} {L}.", p),
        )
    },
    |rng, p| {
        (
            format!("www.semanticscholar.org/author/{}", digits(rng, 8)),
            fill("{F} {L} | Semantic Scholar", p),
            format!("Semantic Scholar profile for {}, with {} highly influential citations.", p.name(), rng.gen_range(5..900)),
        )
    },
    |rng, p| {
        (
            format!("orcid.org/0000-000{}-{}-{}", digits(rng, 1), digits(rng, 4), digits(rng, 4)),
            fill("{F} {L} (ORCID)", p),
            fill("ORCID record for {F} {L}. Employment: {U}.", p),
        )
    },
    |rng, p| {
        let conf = pick(rng, CONFS);
        (
            format!("www.{conf}{}.org/program/accepted.html", rng.gen_range(2010..2016)),
            format!("Accepted Papers | {}", conf.to_uppercase()),
            format!("{} ({}). {}.", p.name(), p.uni_name(), raw_title(rng)),
        )
    },
    |rng, p| {
        (
            format!("www.{}/news/{}/research-grant.html", p.dom(), rng.gen_range(2010..2016)),
            fill("{U} News: new research grant", p),
            fill("A team led by {F} {L} received a research grant.", p),
        )
    },
    |rng, p| {
        (
            format!("genealogy.math.ndsu.nodak.edu/id.php?id={}", digits(rng, 5)),
            fill("{F} {L} - The Mathematics Genealogy Project", p),
            fill("Ph.D. {U}. Dissertation advisor and students of {F} {L}.", p),
        )
    },
    |rng, p| {
        (
            format!("www.ratemyprofessors.com/ShowRatings.jsp?tid={}", digits(rng, 6)),
            fill("{F} {L} at {U} | RateMyProfessors.com", p),
            fill("Student ratings for {F} {L}.", p),
        )
    },
    |rng, p| {
        (
            format!("dl.acm.org/author_page.cfm?id=81100{}", digits(rng, 6)),
            fill("ACM Digital Library: {F} {L}", p),
            fill("Author profile page with bibliometrics and publications of {F} {L}.", p),
        )
    },
    |rng, p| {
        (
            format!("www.youtube.com/watch?v={}", digits(rng, 11)),
            format!("{}: {} talk - YouTube", p.name(), pick(rng, TOPICS)),
            format!("Invited talk by {} at {}.", p.name(), pick(rng, CONFS).to_uppercase()),
        )
    },
];

const MINIMAL_SNIPPETS: &[&str] = &[
    "{U}.",
    "{F} {L}, {U}.",
    "Contact: {f}@{dom}",
    "Department of Computer Science, {U}.",
    "",
    "Last updated 2015.",
];

/// A page about the author on a host seen nowhere else in the corpus,
/// with no site-specific words that would give it away.
fn one_off_named_page(rng: &mut ChaCha8Rng, p: &Person) -> (String, String, String) {
    let host: String = (0..rng.gen_range(6..10)).map(|_| char::from(b'a' + rng.gen_range(0..26u8))).collect();
    let tld = pick(rng, &["com", "org", "net", "io"]);
    (
        format!("www.{host}.{tld}/{}-{}/", p.f(), p.l()),
        p.name(),
        format!("{} {}.", p.name(), words(rng, 6, 12).to_lowercase()),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Regime {
    Opaque,
    Prominent,
    Obscure,
    Ordinary,
}

/// The homepage of someone else at the author's university, built from
/// the same URL and title templates as real homepages.
fn colleague_page(rng: &mut ChaCha8Rng, p: &Person) -> (String, String, String, bool) {
    let mut other = Person {
        first: pick(rng, FIRST).to_string(),
        last: pick(rng, LAST).to_string(),
        uni: p.uni,
    };
    if other.last == p.last {
        other.last = LAST[(LAST.iter().position(|l| *l == p.last).unwrap_or(0) + 1) % LAST.len()].to_string();
    }
    let opaque = chance(rng, 0.3);
    let url = homepage_url(rng, &other, opaque);
    let title = if opaque { other.name() } else { fill(pick(rng, HOME_TITLES), &other) };
    (url, title, home_snippet(rng, &other), false)
}

struct HomepageOptions {
    /// URL to use for the true homepage; an absent homepage when `None`
    /// together with `include_homepage == false`.
    homepage: Option<String>,
    include_homepage: bool,
    noisy: bool,
}

fn author_results(
    rng: &mut ChaCha8Rng,
    p: &Person,
    n_results: usize,
    noise: &NoiseSpec,
    opts: &HomepageOptions,
    namesake_pool: &[Person],
) -> Vec<LabeledHit> {
    let mut hits: Vec<(String, String, String, bool)> = Vec::new();
    let noisy = opts.noisy;
    let regime = if noisy {
        let u: f64 = rng.gen();
        let cuts = [
            noise.homepage_without_name,
            noise.shared_academic_vocab,
            noise.obscure_author,
        ];
        let mut acc = 0.0;
        let mut r = Regime::Ordinary;
        for (c, reg) in cuts.iter().zip([Regime::Opaque, Regime::Prominent, Regime::Obscure]) {
            acc += c;
            if u < acc {
                r = reg;
                break;
            }
        }
        r
    } else {
        Regime::Ordinary
    };
    let home = match &opts.homepage {
        Some(u) => u.clone(),
        None => homepage_url(rng, p, regime == Regime::Opaque),
    };
    if opts.include_homepage && n_results > 0 {
        let bare = matches!(regime, Regime::Opaque | Regime::Obscure);
        let title = if bare || (noisy && chance(rng, noise.generic_homepage_title)) {
            p.name()
        } else {
            fill(pick(rng, HOME_TITLES), p)
        };
        let snippet = if regime == Regime::Obscure {
            fill(pick(rng, MINIMAL_SNIPPETS), p)
        } else {
            home_snippet(rng, p)
        };
        hits.push((home.clone(), title, snippet, true));
    }
    if noisy && chance(rng, noise.namesake_homepage) && hits.len() < n_results {
        let other = namesake_pool
            .iter()
            .find(|o| o.first != p.first)
            .cloned()
            .unwrap_or_else(|| Person {
                first: "Alex".into(),
                last: p.last.clone(),
                uni: (p.uni + 1) % UNIS.len(),
            });
        let other = Person {
            last: p.last.clone(),
            ..other
        };
        hits.push((
            format!("www.cs.{}/~{}/", other.dom(), other.l()),
            fill(pick(rng, HOME_TITLES), &other),
            home_snippet(rng, &other),
            false,
        ));
    }
    if noisy
        && regime != Regime::Opaque
        && opts.include_homepage
        && chance(rng, noise.own_subpage)
        && hits.len() < n_results
    {
        let base = if home.ends_with('/') {
            home.clone()
        } else if let Some(stripped) = home.strip_suffix("index.html") {
            stripped.to_string()
        } else {
            format!("{home}/")
        };
        hits.push((
            format!("{base}publications.html"),
            fill("Publications - {F} {L}", p),
            fill("Selected publications of {F} {L}, sorted by year.", p),
            false,
        ));
    }
    if matches!(regime, Regime::Prominent | Regime::Ordinary) {
        let n_colleagues = if noisy { rng.gen_range(0..=2) } else { 0 };
        for _ in 0..n_colleagues {
            if hits.len() >= n_results {
                break;
            }
            hits.push(colleague_page(rng, p));
        }
    }
    let slots = n_results.saturating_sub(hits.len());
    let named_share = match regime {
        Regime::Opaque => 0.6,
        Regime::Obscure => 0.0,
        Regime::Prominent => rng.gen_range(0.2..0.5),
        Regime::Ordinary => if noisy { rng.gen_range(0.0..0.5) } else { 0.3 },
    };
    let n_named = (named_share * slots as f64).round() as usize;
    let mut named: Vec<&Distractor> = NAMED_DISTRACTORS.iter().collect();
    named.shuffle(rng);
    let mut anon: Vec<&Distractor> = ANON_DISTRACTORS.iter().collect();
    anon.shuffle(rng);
    for k in 0..slots {
        let (u, t, mut s) = if k < n_named {
            if !noisy && k < named.len() {
                named[k](rng, p)
            } else if regime != Regime::Opaque && k % 2 == 0 && k / 2 < named.len() {
                named[k / 2](rng, p)
            } else {
                one_off_named_page(rng, p)
            }
        } else {
            anon[(k - n_named) % anon.len()](rng, p)
        };
        if regime == Regime::Prominent {
            s = format!("{s} {}", home_snippet(rng, p));
        }
        hits.push((u, t, s, false));
    }
    hits.shuffle(rng);
    hits.into_iter()
        .enumerate()
        .map(|(i, (url, title, snippet, homepage))| LabeledHit {
            rank: i as u32 + 1,
            url,
            title,
            snippet,
            homepage,
        })
        .collect()
}

/// Labeled author-query result pages: one true homepage per query.
pub fn homepage_queries(spec: &FixtureSpec) -> Vec<LabeledQueryLine> {
    let mut rng = stream(spec.seed, 1);
    let mut taken = BTreeSet::new();
    let people = distinct_people(&mut rng, spec.n_authors, &mut taken);
    let n = spec.results_per_query.max(1);
    people
        .iter()
        .map(|p| {
            let pool: Vec<Person> = people.iter().filter(|o| o.last == p.last).cloned().collect();
            let results = author_results(
                &mut rng,
                p,
                n,
                &spec.noise,
                &HomepageOptions {
                    homepage: None,
                    include_homepage: true,
                    noisy: true,
                },
                &pool,
            );
            LabeledQueryLine {
                name: p.name(),
                results,
            }
        })
        .collect()
}

fn words(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> String {
    let n = rng.gen_range(lo..=hi);
    let mut s: Vec<&str> = (0..n).map(|_| *pick(rng, WORDS)).collect();
    if s.first() == Some(&"a") {
        s[0] = "most";
    }
    let mut line = s.join(" ");
    if let Some(c) = line.get(..1) {
        let up = c.to_uppercase();
        line.replace_range(..1, &up);
    }
    line
}

fn body(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    (0..n).map(|_| words(rng, 9, 14) + ".").collect()
}

fn title_case_topic(t: &str) -> String {
    t.split(' ')
        .map(|w| {
            let mut c = w.chars();
            match c.next() {
                Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn raw_title(rng: &mut ChaCha8Rng) -> String {
    let a = pick(rng, ADJ);
    let n1 = pick(rng, NOUN);
    let n2 = pick(rng, NOUN);
    let d = pick(rng, DOMAINS);
    let t = title_case_topic(pick(rng, TOPICS));
    match rng.gen_range(0..6) {
        0 => format!("{a} {n1} for {d}"),
        1 => format!("Learning {n1} with {a} {n2}"),
        2 => format!("Towards {a} {n1} in {d}"),
        3 => format!("{n1} and {n2}: A {a} Approach to {t}"),
        4 => format!("On the {a} {n1} of {d}"),
        _ => format!("{a} {n1} via {n2} for {t}"),
    }
}

/// Titles whose compact forms are pairwise non-nested, so first-page
/// matching cannot confuse one for another.
struct TitleBank {
    keys: Vec<String>,
}

impl TitleBank {
    fn new() -> Self {
        Self { keys: Vec::new() }
    }

    fn fresh(&mut self, rng: &mut ChaCha8Rng) -> String {
        loop {
            let t = raw_title(rng);
            let k = compact_key(&t);
            if self.keys.iter().all(|o| !o.contains(&k) && !k.contains(o.as_str())) {
                self.keys.push(k);
                return t;
            }
        }
    }
}

fn split_title(rng: &mut ChaCha8Rng, title: &str, allow_split: bool) -> Vec<String> {
    let ws: Vec<&str> = title.split(' ').collect();
    if allow_split && ws.len() >= 6 && chance(rng, 0.4) {
        let mid = ws.len() / 2;
        vec![ws[..mid].join(" "), ws[mid..].join(" ")]
    } else {
        vec![title.to_string()]
    }
}

fn reference(rng: &mut ChaCha8Rng, i: usize) -> String {
    let a = pick(rng, LAST);
    let b = pick(rng, LAST);
    let t = raw_title(rng);
    let conf = pick(rng, CONFS).to_uppercase();
    format!(
        "[{i}] {}. {a} and {}. {b}. {t}. In Proc. of {conf}, {}.",
        &pick(rng, FIRST)[..1],
        &pick(rng, FIRST)[..1],
        rng.gen_range(1995..2016)
    )
}

/// Lays out `lines` onto pages of `per_page` lines.
fn paginate(lines: Vec<String>, per_page: usize) -> Vec<Vec<String>> {
    lines.chunks(per_page.max(1)).map(|c| c.to_vec()).collect()
}

struct PaperSpec<'a> {
    title: &'a str,
    authors: &'a [String],
    affiliation: &'a str,
    emails: &'a [String],
}

fn make_paper(rng: &mut ChaCha8Rng, id: &str, ps: &PaperSpec<'_>, noisy: bool) -> NormalizedDocument {
    let n_pages = if !noisy {
        rng.gen_range(8..=12)
    } else {
        match rng.gen_range(0..10) {
            0 | 1 => rng.gen_range(3..=5),
            2 | 3 => rng.gen_range(15..=30),
            _ => rng.gen_range(6..=14),
        }
    };
    let per_page = rng.gen_range(40..=50);
    let mut lines: Vec<String> = split_title(rng, ps.title, true);
    lines.push(String::new());
    lines.push(ps.authors.join(", "));
    lines.push(ps.affiliation.to_string());
    if !ps.emails.is_empty() {
        lines.push(ps.emails.join(" "));
    }
    lines.push(String::new());
    let abs_style = if noisy { rng.gen_range(0..20) } else { 0 };
    let phrase = !noisy || chance(rng, 0.8);
    let n_abs = rng.gen_range(6..=9);
    let mut abs = body(rng, n_abs);
    if phrase {
        abs[0] = format!("In this paper we {}", words(rng, 6, 10).to_lowercase());
    }
    match abs_style {
        0..=14 => lines.push("Abstract".into()),
        15..=17 => abs[0] = format!("Abstract—{}", abs[0]),
        _ => {}
    }
    lines.extend(abs);
    lines.push(String::new());
    lines.push(if noisy && chance(rng, 0.15) { "1. INTRODUCTION".into() } else { "1 Introduction".into() });
    let total = n_pages * per_page;
    let refs: Vec<String> = (1..=rng.gen_range(10..=25)).map(|i| reference(rng, i)).collect();
    let ack = if !noisy || chance(rng, 0.6) {
        vec!["Acknowledgments".to_string(), words(rng, 8, 12) + ".", words(rng, 6, 10) + "."]
    } else {
        Vec::new()
    };
    let tail_len = refs.len() + ack.len() + 1;
    let mut section = 2;
    let mut sections: Vec<&str> = SECTIONS.to_vec();
    sections.shuffle(rng);
    let mut si = 0;
    while lines.len() + tail_len < total {
        if rng.gen_range(0..per_page) == 0 && si < sections.len() {
            lines.push(format!("{section} {}", sections[si]));
            section += 1;
            si += 1;
        } else if rng.gen_range(0..per_page * 2) == 0 {
            lines.push(format!("{}.{} {} {}", section.max(3) - 1, rng.gen_range(1..4), pick(rng, ADJ), pick(rng, NOUN)));
        } else {
            lines.push(words(rng, 9, 14) + ".");
        }
    }
    lines.extend(ack);
    let refs_heading = if noisy && chance(rng, 0.1) { "Bibliography" } else { "References" };
    if !(noisy && chance(rng, 0.05)) {
        lines.push(refs_heading.into());
    }
    lines.extend(refs);
    let pages = paginate(lines, per_page);
    let size = pages.len() as u64 * rng.gen_range(18_000..45_000u64);
    NormalizedDocument::new(id, size, pages).expect("generated paper has pages")
}

fn make_thesis(rng: &mut ChaCha8Rng, id: &str, title: &str, author: &Person, noisy: bool) -> NormalizedDocument {
    let n_pages: usize = if noisy { rng.gen_range(40..=200) } else { rng.gen_range(60..=140) };
    let per_page = rng.gen_range(28..=34);
    let mut pages: Vec<Vec<String>> = Vec::new();
    let mut first = split_title(rng, title, true);
    first.extend([
        String::new(),
        "A dissertation submitted in partial fulfillment".into(),
        "of the requirements for the degree of".into(),
        "Doctor of Philosophy".into(),
        String::new(),
        author.name(),
        author.uni_name().into(),
        rng.gen_range(2005..2016).to_string(),
    ]);
    pages.push(first);
    if !(noisy && chance(rng, 0.15)) {
        let mut p = vec!["Abstract".to_string()];
        let mut b = body(rng, per_page - 2);
        if !noisy || chance(rng, 0.85) {
            b[1] = format!("In this thesis we {}", words(rng, 6, 10).to_lowercase());
        }
        p.extend(b);
        pages.push(p);
    }
    let mut p = vec!["Acknowledgements".to_string()];
    p.extend(body(rng, 8));
    pages.push(p);
    let n_ch = rng.gen_range(4..=8);
    let mut toc = vec!["Table of Contents".to_string()];
    for c in 1..=n_ch {
        toc.push(format!("Chapter {c} {} {} .... {}", pick(rng, ADJ), pick(rng, NOUN), c * 12));
    }
    pages.push(toc);
    let refs_pages = rng.gen_range(4..=8);
    let body_pages = n_pages.saturating_sub(pages.len() + refs_pages).max(n_ch);
    let per_ch = (body_pages / n_ch).max(1);
    for c in 1..=n_ch {
        for k in 0..per_ch {
            let mut page = Vec::new();
            if k == 0 {
                page.push(format!("Chapter {c}"));
                page.push(if c == 1 { "Introduction".into() } else { format!("{} {}", pick(rng, ADJ), pick(rng, NOUN)) });
            }
            if k % 3 == 1 {
                page.push(format!("{c}.{} {} {}", k / 3 + 1, pick(rng, ADJ), pick(rng, NOUN)));
            }
            while page.len() < per_page {
                page.push(words(rng, 9, 14) + ".");
            }
            if noisy && chance(rng, 0.01) {
                page.push("As argued in this paper and elsewhere.".into());
            }
            pages.push(page);
        }
    }
    let mut refs = vec![if chance(rng, 0.5) { "Bibliography" } else { "References" }.to_string()];
    refs.extend((1..=refs_pages * per_page).map(|i| reference(rng, i)));
    pages.extend(paginate(refs, per_page));
    let size = pages.len() as u64 * rng.gen_range(8_000..20_000u64);
    NormalizedDocument::new(id, size, pages).expect("thesis has pages")
}

fn make_book(rng: &mut ChaCha8Rng, id: &str, title: &str, author: &Person, noisy: bool) -> NormalizedDocument {
    let n_pages: usize = if noisy { rng.gen_range(80..=400) } else { rng.gen_range(120..=260) };
    let per_page = rng.gen_range(26..=32);
    let mut pages: Vec<Vec<String>> = vec![vec![
        title.to_string(),
        String::new(),
        author.name(),
        format!("{} Press", pick(rng, LAST)),
        rng.gen_range(1990..2016).to_string(),
    ]];
    let n_ch = rng.gen_range(8..=16);
    let mut toc = vec!["Contents".to_string()];
    for c in 1..=n_ch {
        toc.push(format!("{c} {} {} {}", pick(rng, ADJ), pick(rng, NOUN), c * 15));
    }
    pages.push(toc);
    let mut preface = vec!["Preface".to_string()];
    let mut b = body(rng, per_page - 1);
    if !noisy || chance(rng, 0.9) {
        b[2] = format!("This book is {}", words(rng, 6, 10).to_lowercase());
    }
    preface.extend(b);
    pages.push(preface);
    let per_ch = (n_pages.saturating_sub(6) / n_ch).max(1);
    for c in 1..=n_ch {
        for k in 0..per_ch {
            let mut page = Vec::new();
            if k == 0 {
                page.push(format!("Chapter {c}"));
                page.push(format!("{} {}", pick(rng, ADJ), pick(rng, NOUN)));
            }
            while page.len() < per_page {
                page.push(words(rng, 9, 14) + ".");
            }
            pages.push(page);
        }
    }
    if chance(rng, 0.6) {
        let mut refs = vec!["Bibliography".to_string()];
        refs.extend((1..=per_page * 2).map(|i| reference(rng, i)));
        pages.extend(paginate(refs, per_page));
    }
    let mut index = vec!["Index".to_string()];
    index.extend((0..per_page).map(|_| format!("{}, {}", pick(rng, WORDS), rng.gen_range(1..400))));
    pages.push(index);
    let size = pages.len() as u64 * rng.gen_range(4_000..12_000u64);
    NormalizedDocument::new(id, size, pages).expect("book has pages")
}

fn make_slides(rng: &mut ChaCha8Rng, id: &str, title: &str, author: &Person, noisy: bool) -> NormalizedDocument {
    let n = rng.gen_range(12..=45);
    let mut pages = vec![vec![
        title.to_string(),
        author.name(),
        author.uni_name().to_string(),
        format!("{} {}", pick(rng, CONFS).to_uppercase(), rng.gen_range(2008..2016)),
    ]];
    let headings = ["Outline", "Motivation", "Introduction", "Problem", "Our Idea", "Results", "Experiments", "Related Work", "Summary"];
    for k in 1..n - 1 {
        let mut page = vec![if k == 1 { "Outline".to_string() } else { pick(rng, &headings).to_string() }];
        for _ in 0..rng.gen_range(2..=6) {
            let text = words(rng, 2, 7);
            page.push(if chance(rng, 0.7) { format!("• {text}") } else { text });
        }
        if noisy && chance(rng, 0.02) {
            page.push("• see this paper for details".into());
        }
        pages.push(page);
    }
    if noisy && chance(rng, 0.3) {
        let mut refs = vec!["References".to_string()];
        refs.extend((1..=4).map(|i| reference(rng, i)));
        pages.push(refs);
    }
    pages.push(vec!["Questions?".into(), "Thank you".into()]);
    let size = pages.len() as u64 * rng.gen_range(40_000..160_000u64);
    NormalizedDocument::new(id, size, pages).expect("slides have pages")
}

fn make_cv(rng: &mut ChaCha8Rng, id: &str, p: &Person, noisy: bool) -> NormalizedDocument {
    let n_pages = if noisy { rng.gen_range(1..=10) } else { rng.gen_range(2..=6) };
    let per_page = rng.gen_range(35..=45);
    let mut lines = vec![p.name()];
    match if noisy { rng.gen_range(0..10) } else { 0 } {
        0..=6 => lines.push("Curriculum Vitae".into()),
        7 => lines.push("Resume".into()),
        _ => {}
    }
    lines.push(format!("Department of Computer Science, {}", p.uni_name()));
    lines.push(format!("Email: {}@{}", p.f(), p.dom()));
    lines.push(format!("Web: http://www.cs.{}/~{}/", p.dom(), p.l()));
    let sections = ["Education", "Employment", "Research Interests", "Publications", "Awards", "Teaching", "Service", "Students"];
    let mut pub_no = 1;
    let total = n_pages * per_page;
    let mut si = 0;
    while lines.len() < total {
        let s = sections[si % sections.len()];
        si += 1;
        lines.push(s.to_string());
        let n = rng.gen_range(4..=12);
        for _ in 0..n {
            match s {
                "Publications" => {
                    lines.push(format!("{pub_no}. {}. {}. {} {}.", p.last, raw_title(rng), pick(rng, CONFS).to_uppercase(), rng.gen_range(2000..2016)));
                    pub_no += 1;
                }
                "Education" | "Employment" => lines.push(format!("{}–{} {}, {}", rng.gen_range(1990..2010), rng.gen_range(2010..2016), pick(rng, &["Ph.D.", "M.Sc.", "Assistant Professor", "Postdoc", "Research Scientist"]), pick(rng, UNIS).0)),
                _ => lines.push(words(rng, 3, 8)),
            }
        }
    }
    if noisy && chance(rng, 0.4) {
        lines.push("References".into());
        for _ in 0..3 {
            let r = Person { first: pick(rng, FIRST).to_string(), last: pick(rng, LAST).to_string(), uni: rng.gen_range(0..UNIS.len()) };
            lines.push(format!("Prof. {} {}@{}", r.name(), r.l(), r.dom()));
        }
    }
    let pages = paginate(lines, per_page);
    let size = pages.len() as u64 * rng.gen_range(20_000..60_000u64);
    NormalizedDocument::new(id, size, pages).expect("cv has pages")
}

fn make_other(rng: &mut ChaCha8Rng, id: &str, noisy: bool) -> NormalizedDocument {
    let n_pages = rng.gen_range(1..=12);
    let per_page = rng.gen_range(20..=45);
    let mut lines = Vec::new();
    match rng.gen_range(0..3) {
        0 => {
            lines.push(format!("CS {}: {}", rng.gen_range(100..700), title_case_topic(pick(rng, TOPICS))));
            lines.push("Course Description".into());
            lines.extend(body(rng, 5));
            lines.push("Grading".into());
            lines.push("Homework 40%, Midterm 25%, Final 35%".into());
            lines.push("Schedule".into());
            for w in 1..=14 {
                lines.push(format!("Week {w}: {} {}", pick(rng, ADJ), pick(rng, NOUN)));
            }
        }
        1 => {
            lines.push(format!("{} User Manual", pick(rng, NOUN)));
            if chance(rng, 0.5) {
                lines.push("Introduction".into());
            }
            lines.push("1 Installation".into());
            lines.extend(body(rng, 6));
            lines.push("2 Configuration".into());
        }
        _ => {
            lines.push(format!("{} Newsletter", pick(rng, UNIS).0));
            lines.push(format!("Issue {}", rng.gen_range(1..60)));
        }
    }
    if noisy && chance(rng, 0.1) {
        lines.push("Abstract".into());
    }
    while lines.len() < n_pages * per_page {
        lines.push(words(rng, 5, 14) + ".");
    }
    if noisy && chance(rng, 0.1) {
        lines.push("References".into());
        lines.push(reference(rng, 1));
    }
    let pages = paginate(lines, per_page);
    let size = pages.len() as u64 * rng.gen_range(10_000..50_000u64);
    NormalizedDocument::new(id, size, pages).expect("other doc has pages")
}

fn random_person(rng: &mut ChaCha8Rng) -> Person {
    Person {
        first: pick(rng, FIRST).to_string(),
        last: pick(rng, LAST).to_string(),
        uni: rng.gen_range(0..UNIS.len()),
    }
}

fn make_document(rng: &mut ChaCha8Rng, kind: DocKind, id: &str, titles: &mut TitleBank, noisy: bool) -> NormalizedDocument {
    let p = random_person(rng);
    match kind {
        DocKind::Paper => {
            let title = titles.fresh(rng);
            let co = random_person(rng);
            let authors = vec![p.name(), co.name()];
            let emails = vec![format!("{}@{}", p.l(), p.dom())];
            make_paper(
                rng,
                id,
                &PaperSpec {
                    title: &title,
                    authors: &authors,
                    affiliation: p.uni_name(),
                    emails: &emails,
                },
                noisy,
            )
        }
        DocKind::Thesis => {
            let t = titles.fresh(rng);
            make_thesis(rng, id, &t, &p, noisy)
        }
        DocKind::Book => {
            let t = titles.fresh(rng);
            make_book(rng, id, &t, &p, noisy)
        }
        DocKind::Slides => {
            let t = titles.fresh(rng);
            make_slides(rng, id, &t, &p, noisy)
        }
        DocKind::Cv => make_cv(rng, id, &p, noisy),
        DocKind::Other => make_other(rng, id, noisy),
    }
}

/// Labeled classifier corpus: `paper_fraction` papers, the rest spread
/// evenly over the non-paper kinds, in shuffled order.
pub fn labeled_documents(spec: &FixtureSpec) -> Vec<LabeledDocument> {
    let mut rng = stream(spec.seed, 2);
    let n = spec.n_documents;
    let n_papers = (n as f64 * spec.paper_fraction.clamp(0.0, 1.0)).round() as usize;
    let others = [DocKind::Slides, DocKind::Cv, DocKind::Thesis, DocKind::Book, DocKind::Other];
    let mut kinds: Vec<DocKind> = (0..n)
        .map(|i| if i < n_papers { DocKind::Paper } else { others[(i - n_papers) % others.len()] })
        .collect();
    kinds.shuffle(&mut rng);
    let mut titles = TitleBank::new();
    kinds
        .into_iter()
        .enumerate()
        .map(|(i, kind)| {
            let noisy = chance(&mut rng, spec.noise.document);
            LabeledDocument {
                kind,
                document: make_document(&mut rng, kind, &format!("doc-{i:04}"), &mut titles, noisy),
            }
        })
        .collect()
}

/// One servable URL of the mini-web.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SitePage {
    pub content_type: String,
    /// Absolute targets of the page's anchors, in document order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Sitemap {
    pub pages: BTreeMap<String, SitePage>,
    /// Host to disallowed path prefixes.
    pub robots: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
struct WorldDoc {
    kind: DocKind,
    /// Normalized title, for papers.
    title: Option<String>,
    /// Target this copy matches on its first page.
    matches: Option<String>,
    json: Vec<u8>,
}

#[derive(Debug, Clone)]
enum Served {
    Html { body: String, links: Vec<String> },
    Doc(String),
    Text(String),
}

/// The generated pipeline world, before it is written to disk.
pub struct PipelineWorld {
    pub targets: Vec<Target>,
    pub titles: Vec<String>,
    pub authors: Vec<String>,
    pub search: Vec<FixtureLine>,
    pub sitemap: Sitemap,
    pub ground_truth: GroundTruth,
    pub exclude_domains: Vec<String>,
    files: BTreeMap<String, Served>,
    docs: BTreeMap<String, WorldDoc>,
}

pub const EXCLUDED_DOMAIN: &str = "citeseerx.ist.psu.edu";

struct Site {
    owner: usize,
    host: String,
    base: String,
    robots_prefix: Option<String>,
}

fn url_host(url: &str) -> &str {
    let rest = url.split_once("://").map_or(url, |(_, r)| r);
    rest.split(['/', '?']).next().unwrap_or("")
}

fn url_path(url: &str) -> &str {
    let rest = url.split_once("://").map_or(url, |(_, r)| r);
    rest.find('/').map_or("/", |i| &rest[i..])
}

fn html_page(title: &str, hrefs: &[String]) -> String {
    let mut s = format!("<!DOCTYPE html>\n<html><head><title>{title}</title></head><body>\n<h1>{title}</h1>\n<ul>\n");
    for h in hrefs {
        s.push_str(&format!("<li><a href=\"{h}\">{h}</a></li>\n"));
    }
    s.push_str("</ul>\n</body></html>\n");
    s
}

fn slug(title: &str) -> String {
    normalize_phrase(title).replace(' ', "-")
}

impl PipelineWorld {
    fn add_doc(&mut self, key: &str, doc: &NormalizedDocument, kind: DocKind, title: Option<&str>, matches: Option<&str>) {
        let json = serde_json::to_vec(doc).expect("document serializes");
        self.docs.insert(
            key.to_string(),
            WorldDoc {
                kind,
                title: title.map(normalize_phrase),
                matches: matches.map(str::to_string),
                json,
            },
        );
    }

    fn serve_doc(&mut self, url: &str, key: &str) {
        self.files.insert(url.to_string(), Served::Doc(key.to_string()));
        self.sitemap.pages.insert(
            url.to_string(),
            SitePage {
                content_type: "application/pdf".into(),
                links: Vec::new(),
            },
        );
    }

    fn serve_html(&mut self, url: &str, title: &str, hrefs: Vec<String>, links: Vec<String>) {
        self.files.insert(
            url.to_string(),
            Served::Html {
                body: html_page(title, &hrefs),
                links: links.clone(),
            },
        );
        self.sitemap.pages.insert(
            url.to_string(),
            SitePage {
                content_type: "text/html".into(),
                links,
            },
        );
    }

    /// Writes the mini-web under `root` as `<host>/<path>`.
    fn write_web(&self, root: &Path) -> Result<()> {
        for (url, served) in &self.files {
            let host = url_host(url);
            let mut rel = url_path(url).trim_start_matches('/').to_string();
            if rel.is_empty() || rel.ends_with('/') {
                rel.push_str("index.html");
            }
            let path = root.join(host).join(rel);
            fs::create_dir_all(path.parent().expect("file has parent"))?;
            match served {
                Served::Html { body, .. } => fs::write(&path, body)?,
                Served::Doc(key) => fs::write(&path, &self.docs[key].json)?,
                Served::Text(t) => fs::write(&path, t)?,
            }
        }
        fs::write(root.join("sitemap.json"), serde_json::to_vec_pretty(&self.sitemap)?)?;
        Ok(())
    }
}

fn person_emails(p: &Person) -> Vec<String> {
    vec![format!("{}@{}", p.l(), p.dom())]
}

/// Builds the servable world, the search fixture and the enumerated
/// ground truth for the end-to-end runs.
pub fn pipeline_world(spec: &FixtureSpec) -> PipelineWorld {
    let mut rng = stream(spec.seed, 3);
    let mut world = PipelineWorld {
        targets: Vec::new(),
        titles: Vec::new(),
        authors: Vec::new(),
        search: Vec::new(),
        sitemap: Sitemap::default(),
        ground_truth: GroundTruth {
            manifest: Manifest::default(),
            intended_targets: 0,
            recovered_targets: Vec::new(),
            recovered_fraction: 0.0,
            crawl_fetches: BTreeMap::new(),
            homepages: BTreeMap::new(),
        },
        exclude_domains: vec![EXCLUDED_DOMAIN.to_string()],
        files: BTreeMap::new(),
        docs: BTreeMap::new(),
    };
    let mut taken = BTreeSet::new();
    let mut unis: Vec<usize> = (0..UNIS.len()).collect();
    unis.shuffle(&mut rng);
    let n_auth = spec.n_pipeline_authors.min(UNIS.len());
    let mut authors = distinct_people(&mut rng, n_auth, &mut taken);
    for (j, a) in authors.iter_mut().enumerate() {
        a.uni = unis[j];
    }
    let mut titles = TitleBank::new();

    // Sites.
    let mut sites = Vec::new();
    for (j, a) in authors.iter().enumerate() {
        let (host, base_path) = match j % 3 {
            0 => (format!("www.cs.{}", a.dom()), format!("/~{}/", a.l())),
            1 => (format!("people.{}.{}", pick(&mut rng, DEPTS), a.dom()), format!("/{}.{}/", a.f(), a.l())),
            _ => (format!("www.{}{}.com", a.f(), a.l()), "/".to_string()),
        };
        let robots_prefix = (j % 3 == 0).then(|| format!("{base_path}private/"));
        sites.push(Site {
            owner: j,
            base: format!("http://{host}{base_path}"),
            host,
            robots_prefix,
        });
    }

    // Targets and their copies.
    struct Paper {
        target: Target,
        owner: usize,
    }
    let mut papers: Vec<Paper> = Vec::new();
    for (j, a) in authors.iter().enumerate() {
        for k in 0..spec.papers_per_author {
            let title = titles.fresh(&mut rng);
            let mut names = vec![a.name()];
            for _ in 0..rng.gen_range(0..=2) {
                names.push(random_person(&mut rng).name());
            }
            papers.push(Paper {
                target: Target {
                    id: format!("T{j:02}-{k}"),
                    title,
                    authors: names,
                },
                owner: j,
            });
        }
    }
    let make_copy = |rng: &mut ChaCha8Rng, world: &mut PipelineWorld, p: &Paper, key: &str, anonymous: bool| {
        let owner = &authors[p.owner];
        let (names, emails) = if anonymous {
            (vec!["Anonymous Authors".to_string()], Vec::new())
        } else {
            (p.target.authors.clone(), person_emails(owner))
        };
        let doc = make_paper(
            rng,
            key,
            &PaperSpec {
                title: &p.target.title,
                authors: &names,
                affiliation: if anonymous { "Under review" } else { owner.uni_name() },
                emails: &emails,
            },
            false,
        );
        let matches = (!anonymous).then_some(p.target.id.as_str());
        world.add_doc(key, &doc, DocKind::Paper, Some(&p.target.title), matches);
    };

    // Homepage sites.
    let mut site_paper_urls: BTreeMap<String, String> = BTreeMap::new();
    let mut cv_urls: Vec<String> = Vec::new();
    for (j, site) in sites.iter().enumerate() {
        let a = &authors[site.owner];
        let base = site.base.clone();
        let mine: Vec<usize> = (0..papers.len()).filter(|&i| papers[i].owner == j).collect();
        let url_of = |rel: &str| format!("{base}{rel}");
        let mut home_hrefs: Vec<String> = Vec::new();
        let mut home_links: Vec<String> = Vec::new();
        let mut link = |href: String, abs: Option<String>| {
            home_hrefs.push(href);
            if let Some(a) = abs {
                if !home_links.contains(&a) {
                    home_links.push(a);
                }
            }
        };
        let mut papers_hrefs = Vec::new();
        let mut papers_links = Vec::new();
        let mut archive_hrefs = Vec::new();
        let mut archive_links = Vec::new();
        for (k, &pi) in mine.iter().enumerate() {
            let rel = format!("pubs/{}.pdf", slug(&papers[pi].target.title));
            let key = format!("{}-home", papers[pi].target.id);
            match k {
                0 => {
                    link(rel.clone(), Some(url_of(&rel)));
                }
                1 | 2 if !(k == 2 && j % 4 == 3) => {
                    papers_hrefs.push(rel.clone());
                    papers_links.push(url_of(&rel));
                }
                3 if j % 2 == 0 => {
                    let u = format!("http://arxiv-mirror.org/pdf/16{j:02}.{k:04}.pdf");
                    make_copy(&mut rng, &mut world, &papers[pi], &key, false);
                    world.serve_doc(&u, &key);
                    site_paper_urls.insert(papers[pi].target.id.clone(), u.clone());
                    link(u.clone(), Some(u));
                    continue;
                }
                3 => {
                    let deep = format!("projects/old/{}.pdf", slug(&papers[pi].target.title));
                    archive_hrefs.push(format!("old/{}.pdf", slug(&papers[pi].target.title)));
                    archive_links.push(url_of(&deep));
                    make_copy(&mut rng, &mut world, &papers[pi], &key, false);
                    world.serve_doc(&url_of(&deep), &key);
                    site_paper_urls.insert(papers[pi].target.id.clone(), url_of(&deep));
                    continue;
                }
                _ => continue,
            }
            make_copy(&mut rng, &mut world, &papers[pi], &key, false);
            world.serve_doc(&url_of(&rel), &key);
            site_paper_urls.insert(papers[pi].target.id.clone(), url_of(&rel));
        }
        link("papers.html".into(), Some(url_of("papers.html")));
        let cv_key = format!("cv-{j:02}");
        let cv = make_cv(&mut rng, &cv_key, a, false);
        world.add_doc(&cv_key, &cv, DocKind::Cv, None, None);
        world.serve_doc(&url_of("cv.pdf"), &cv_key);
        cv_urls.push(url_of("cv.pdf"));
        link("cv.pdf".into(), Some(url_of("cv.pdf")));
        link("talks.html".into(), Some(url_of("talks.html")));
        link("projects.html".into(), Some(url_of("projects.html")));
        let conf = format!("http://www.{}{}.org/", pick(&mut rng, CONFS), rng.gen_range(2012..2016));
        link(conf.clone(), Some(conf));
        link("private/drafts.html".into(), Some(url_of("private/drafts.html")));
        link("missing.pdf".into(), Some(url_of("missing.pdf")));
        link(format!("mailto:{}@{}", a.l(), a.dom()), None);
        link("papers.html#recent".into(), None);
        link("#top".into(), None);
        world.serve_html(&base, &a.name(), home_hrefs, home_links);

        papers_hrefs.push("index.html".into());
        papers_links.push(base.clone());
        world.serve_html(&url_of("papers.html"), "Publications", papers_hrefs, papers_links);

        let talk_title = papers[mine[0]].target.title.clone();
        let slides_key = format!("slides-{j:02}");
        let slides = make_slides(&mut rng, &slides_key, &talk_title, a, false);
        world.add_doc(&slides_key, &slides, DocKind::Slides, None, None);
        let slides_rel = format!("talks/{}-slides.pdf", slug(&talk_title));
        world.serve_doc(&url_of(&slides_rel), &slides_key);
        world.serve_html(&url_of("talks.html"), "Talks", vec![slides_rel.clone()], vec![url_of(&slides_rel)]);

        world.serve_html(
            &url_of("projects.html"),
            "Projects",
            vec!["projects/archive.html".into()],
            vec![url_of("projects/archive.html")],
        );
        world.serve_html(&url_of("projects/archive.html"), "Archive", archive_hrefs, archive_links);

        let draft_key = format!("draft-{j:02}");
        let draft = make_other(&mut rng, &draft_key, false);
        world.add_doc(&draft_key, &draft, DocKind::Other, None, None);
        world.serve_doc(&url_of("private/notes.pdf"), &draft_key);
        world.serve_html(
            &url_of("private/drafts.html"),
            "Drafts",
            vec!["notes.pdf".into()],
            vec![url_of("private/notes.pdf")],
        );
        if let Some(prefix) = &site.robots_prefix {
            let robots = format!("User-agent: *\nDisallow: {prefix}\n");
            world.files.insert(format!("http://{}/robots.txt", site.host), Served::Text(robots));
            world.sitemap.robots.insert(site.host.clone(), vec![prefix.clone()]);
        }
    }

    // Title queries (Path 1).
    let mut lines: Vec<FixtureLine> = Vec::new();
    let hit = |rank: u32, url: String, title: &str, rng: &mut ChaCha8Rng| Hit {
        rank,
        url,
        title: title.to_string(),
        snippet: words(rng, 8, 14),
    };
    for (t, p) in papers.iter().enumerate() {
        let owner = &authors[p.owner];
        let id = &p.target.id;
        let n = format!("{}{}", 2000 + t, rng.gen_range(100..999));
        let title = &p.target.title;
        let cite = format!("http://{EXCLUDED_DOMAIN}/viewdoc/download/{}.pdf", id.to_lowercase());
        let mut results: Vec<Hit> = Vec::new();
        match t % 5 {
            0 => {
                if let Some(u) = site_paper_urls.get(id) {
                    results.push(hit(1, u.clone(), title, &mut rng));
                }
                let u = format!("http://arxiv-mirror.org/abs-copies/{}.pdf", id.to_lowercase());
                let key = format!("{id}-mirror");
                make_copy(&mut rng, &mut world, p, &key, false);
                world.serve_doc(&u, &key);
                results.push(hit(2, u, title, &mut rng));
            }
            1 => {
                results.push(hit(1, cite, title, &mut rng));
                let u = format!("http://dl.acm-archive.org/doi/pdf/10.1145/{n}.pdf");
                let key = format!("{id}-publisher");
                make_copy(&mut rng, &mut world, p, &key, false);
                world.serve_doc(&u, &key);
                results.push(hit(2, u, title, &mut rng));
            }
            2 => {
                results.push(hit(1, cv_urls[p.owner].clone(), &format!("{} - CV", owner.name()), &mut rng));
                let u = format!("http://www.semanticarchive.org/papers/{}.pdf", id.to_lowercase());
                let key = format!("{id}-anonymous");
                make_copy(&mut rng, &mut world, p, &key, true);
                world.serve_doc(&u, &key);
                results.push(hit(2, u, title, &mut rng));
            }
            3 => results.push(hit(1, cite, title, &mut rng)),
            _ => {
                results.push(hit(1, format!("http://dl.acm-archive.org/doi/pdf/10.1145/{n}-gone.pdf"), title, &mut rng));
                let other_title = titles.fresh(&mut rng);
                let conf = pick(&mut rng, CONFS);
                let u = format!("http://proceedings.{conf}.org/{}/{n}.pdf", 2010 + t % 6);
                let key = format!("{id}-unrelated");
                let who = random_person(&mut rng);
                let names = vec![who.name()];
                let em = person_emails(&who);
                let doc = make_paper(
                    &mut rng,
                    &key,
                    &PaperSpec { title: &other_title, authors: &names, affiliation: who.uni_name(), emails: &em },
                    false,
                );
                world.add_doc(&key, &doc, DocKind::Paper, Some(&other_title), None);
                world.serve_doc(&u, &key);
                results.push(hit(2, u, &other_title, &mut rng));
                let news = format!("http://www.{}/news.html", owner.dom());
                world.serve_html(&news, "News", Vec::new(), Vec::new());
                results.push(hit(3, news, "Department news", &mut rng));
            }
        }
        lines.push(FixtureLine {
            q: Query::title(title).expect("non-empty title").rendered,
            results,
        });
        world.titles.push(title.clone());
    }
    let unindexed = "An Unindexed Technical Note".to_string();
    lines.push(FixtureLine {
        q: Query::title(&unindexed).expect("non-empty").rendered,
        results: Vec::new(),
    });
    world.titles.push(unindexed);

    // Author queries (Path 2).
    for (j, a) in authors.iter().enumerate() {
        let absent = j % 6 == 5;
        let results = author_results(
            &mut rng,
            a,
            spec.results_per_query.max(1),
            &spec.noise,
            &HomepageOptions {
                homepage: Some(sites[j].base.clone()),
                include_homepage: !absent,
                noisy: false,
            },
            &[],
        );
        world
            .ground_truth
            .homepages
            .insert(a.name(), (!absent).then(|| sites[j].base.clone()));
        lines.push(FixtureLine {
            q: Query::author(&a.name()).expect("valid name").rendered,
            results: results
                .into_iter()
                .map(|h| Hit { rank: h.rank, url: h.url, title: h.title, snippet: h.snippet })
                .collect(),
        });
        world.authors.push(a.name());
    }
    if spec.n_pipeline_authors > 0 {
        let nobody = "Quentin Nobody".to_string();
        lines.push(FixtureLine {
            q: Query::author(&nobody).expect("valid name").rendered,
            results: Vec::new(),
        });
        world.ground_truth.homepages.insert(nobody.clone(), None);
        world.authors.push(nobody);
        let unrecorded = "Unrecorded Person".to_string();
        world.ground_truth.homepages.insert(unrecorded.clone(), None);
        world.authors.push(unrecorded);
    }
    world.search = lines;
    world.targets = papers.into_iter().map(|p| p.target).collect();
    enumerate_ground_truth(&mut world, &sites);
    world
}

#[derive(Default)]
struct SliceTruth {
    queries: u64,
    fetched: u64,
    first_url: BTreeMap<String, String>,
}

fn tld(url: &str) -> String {
    url_host(url).rsplit('.').next().unwrap_or("").to_string()
}

/// Enumerates what both paths must yield, straight from the world model.
fn enumerate_ground_truth(world: &mut PipelineWorld, sites: &[Site]) {
    let by_query: BTreeMap<&str, &FixtureLine> = world.search.iter().map(|l| (l.q.as_str(), l)).collect();

    let mut p1 = SliceTruth::default();
    for title in &world.titles {
        p1.queries += 1;
        let q = Query::title(title).expect("title").rendered;
        let Some(line) = by_query.get(q.as_str()) else { continue };
        for h in &line.results {
            if url_host(&h.url) == EXCLUDED_DOMAIN {
                continue;
            }
            if let Some(Served::Doc(key)) = world.files.get(&h.url) {
                p1.fetched += 1;
                p1.first_url.entry(key.clone()).or_insert_with(|| h.url.clone());
            }
        }
    }

    let mut p2 = SliceTruth::default();
    for name in &world.authors {
        p2.queries += 1;
        let Some(Some(home)) = world.ground_truth.homepages.get(name) else { continue };
        let site = sites.iter().find(|s| &s.base == home).expect("homepage has a site");
        let fetched = bfs_world(world, site, 2);
        for url in &fetched {
            if let Some(Served::Doc(key)) = world.files.get(url) {
                p2.fetched += 1;
                p2.first_url.entry(key.clone()).or_insert_with(|| url.clone());
            }
        }
        world.ground_truth.crawl_fetches.insert(home.clone(), {
            let mut v = fetched;
            v.sort();
            v
        });
    }

    let slice = |s: &SliceTruth, docs: &BTreeMap<String, WorldDoc>| {
        let mut m = PathManifest {
            queries_issued: s.queries,
            pdfs_fetched: s.fetched,
            pdfs_unique: s.first_url.len() as u64,
            ..PathManifest::default()
        };
        let mut titles = BTreeSet::new();
        let mut targets = BTreeSet::new();
        for (key, url) in &s.first_url {
            let d = &docs[key];
            if !d.kind.is_paper() {
                continue;
            }
            m.papers_classified += 1;
            *m.domain_histogram.entry(tld(url)).or_default() += 1;
            if let Some(t) = &d.title {
                titles.insert(t.clone());
            }
            if let Some(t) = &d.matches {
                targets.insert(t.clone());
            }
        }
        m.unique_titles = titles.len() as u64;
        m.target_matches = targets.len() as u64;
        (m, titles, targets)
    };
    let (m1, t1, g1) = slice(&p1, &world.docs);
    let (m2, t2, g2) = slice(&p2, &world.docs);
    let recovered: BTreeSet<String> = g1.union(&g2).cloned().collect();
    world.ground_truth.manifest = Manifest {
        overlap_unique_titles: t1.intersection(&t2).count() as u64,
        combined_unique_titles: t1.union(&t2).count() as u64,
        path1: m1,
        path2: m2,
    };
    world.ground_truth.intended_targets = world.targets.len();
    world.ground_truth.recovered_targets = world
        .targets
        .iter()
        .filter(|t| recovered.contains(&t.id))
        .map(|t| t.id.clone())
        .collect();
    world.ground_truth.recovered_fraction = if world.targets.is_empty() {
        0.0
    } else {
        recovered.len() as f64 / world.targets.len() as f64
    };
}

/// URLs a depth-limited crawl of `site` must request: in-site HTML is
/// expanded below `max_depth`, off-site links are followed only to
/// `.pdf` files, robots-disallowed paths are never requested.
fn bfs_world(world: &PipelineWorld, site: &Site, max_depth: u32) -> Vec<String> {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut out = Vec::new();
    let mut level = vec![site.base.clone()];
    seen.insert(site.base.clone());
    let domain_of = |host: &str| -> String {
        // Every generated site host ends in its owner's registrable
        // domain; `www.<name>.com` sites are their own domain.
        let labels: Vec<&str> = host.split('.').collect();
        let two = labels[labels.len().saturating_sub(2)..].join(".");
        if UNIS.iter().any(|(_, d)| host.ends_with(d)) {
            UNIS.iter().find(|(_, d)| host.ends_with(d)).map(|(_, d)| d.to_string()).unwrap_or(two)
        } else {
            two
        }
    };
    let home_domain = domain_of(&site.host);
    for depth in 0..=max_depth {
        let mut next = Vec::new();
        for url in std::mem::take(&mut level) {
            let host = url_host(&url);
            let blocked = world
                .sitemap
                .robots
                .get(host)
                .is_some_and(|ps| ps.iter().any(|p| url_path(&url).starts_with(p.as_str())));
            if blocked {
                continue;
            }
            out.push(url.clone());
            if depth == max_depth || domain_of(host) != home_domain {
                continue;
            }
            if let Some(Served::Html { links, .. }) = world.files.get(&url) {
                for l in links {
                    if seen.contains(l) {
                        continue;
                    }
                    seen.insert(l.clone());
                    if domain_of(url_host(l)) == home_domain || url_path(l).ends_with(".pdf") {
                        next.push(l.clone());
                    }
                }
            }
        }
        level = next;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSummary {
    pub root: PathBuf,
    pub homepage_queries: usize,
    pub documents: usize,
    pub paper_documents: usize,
    pub targets: usize,
    pub web_pages: usize,
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut out = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub const PIPELINE_TOML: &str = r#"# Fixture run configuration. Paths are relative to this file.
seed = 7
top_k = 10
workers = 1
clock = "simulated"
store_root = "run/store"
report_dir = "run/report"
ranker_model = "models/ranker.json"
classifier_model = "models/classifier.json"
targets = "pipeline/targets.json"
titles = "pipeline/titles.txt"
authors = "pipeline/authors.txt"
ground_truth = "pipeline/ground_truth.json"
exclude_domains = ["citeseerx.ist.psu.edu"]

[search]
backend = "fixture"
fixture = "pipeline/search.jsonl"

[fetch]
backend = "fixture"
web_root = "web"

[crawl]
max_depth = 2
scope = "same_registrable_domain_html"
per_host_delay_ms = 1000
max_pages = 500
obey_robots = true

[training]
homepage_data = "homepage/labeled.jsonl"
documents = "classifier/documents.jsonl"
folds = 5
test_fraction = 0.25
"#;

/// Writes every fixture file under `out_dir`.
pub fn generate_fixtures(spec: &FixtureSpec, out_dir: &Path) -> Result<FixtureSummary> {
    for sub in ["homepage", "classifier", "pipeline", "web", "models"] {
        fs::create_dir_all(out_dir.join(sub))?;
    }
    fs::write(out_dir.join("fixture_spec.json"), serde_json::to_vec_pretty(spec)?)?;
    fs::write(out_dir.join("pipeline.toml"), PIPELINE_TOML)?;

    let hp = homepage_queries(spec);
    write_jsonl(&out_dir.join("homepage/labeled.jsonl"), &hp)?;

    let docs = labeled_documents(spec);
    write_jsonl(&out_dir.join("classifier/documents.jsonl"), &docs)?;

    let world = pipeline_world(spec);
    fs::write(out_dir.join("pipeline/targets.json"), serde_json::to_vec_pretty(&world.targets)?)?;
    fs::write(out_dir.join("pipeline/titles.txt"), world.titles.iter().map(|t| format!("{t}\n")).collect::<String>())?;
    fs::write(out_dir.join("pipeline/authors.txt"), world.authors.iter().map(|t| format!("{t}\n")).collect::<String>())?;
    write_jsonl(&out_dir.join("pipeline/search.jsonl"), &world.search)?;
    fs::write(out_dir.join("pipeline/ground_truth.json"), serde_json::to_vec_pretty(&world.ground_truth)?)?;
    world.write_web(&out_dir.join("web"))?;

    Ok(FixtureSummary {
        root: out_dir.to_path_buf(),
        homepage_queries: hp.len(),
        documents: docs.len(),
        paper_documents: docs.iter().filter(|d| d.kind.is_paper()).count(),
        targets: world.targets.len(),
        web_pages: world.sitemap.pages.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> FixtureSpec {
        FixtureSpec {
            n_authors: 20,
            n_documents: 30,
            n_pipeline_authors: 4,
            ..FixtureSpec::default()
        }
    }

    #[test]
    fn homepage_lines_have_one_homepage() {
        for line in homepage_queries(&small()) {
            assert_eq!(line.results.len(), 10);
            assert_eq!(line.results.iter().filter(|h| h.homepage).count(), 1);
            line.to_labeled_page().unwrap();
        }
    }

    #[test]
    fn corpus_is_balanced() {
        let docs = labeled_documents(&FixtureSpec { n_documents: 100, ..small() });
        let papers = docs.iter().filter(|d| d.kind.is_paper()).count();
        assert_eq!(papers, 50);
    }

    #[test]
    fn zero_sizes_are_valid() {
        let spec = FixtureSpec {
            n_authors: 0,
            n_documents: 0,
            n_pipeline_authors: 0,
            ..FixtureSpec::default()
        };
        assert!(homepage_queries(&spec).is_empty());
        assert!(labeled_documents(&spec).is_empty());
        let w = pipeline_world(&spec);
        assert!(w.targets.is_empty());
        assert_eq!(w.ground_truth.manifest.path2.queries_issued, 0);
    }

    #[test]
    fn world_truth_is_consistent() {
        let w = pipeline_world(&small());
        for p in [&w.ground_truth.manifest.path1, &w.ground_truth.manifest.path2] {
            p.check_invariants().unwrap();
        }
        assert!(w.ground_truth.recovered_fraction > 0.0 && w.ground_truth.recovered_fraction < 1.0);
        for fetched in w.ground_truth.crawl_fetches.values() {
            assert!(!fetched.iter().any(|u| u.contains("/projects/old/")));
        }
    }

    #[test]
    fn titles_do_not_nest() {
        let mut rng = stream(1, 1);
        let mut bank = TitleBank::new();
        let ts: Vec<String> = (0..200).map(|_| compact_key(&bank.fresh(&mut rng))).collect();
        for (i, a) in ts.iter().enumerate() {
            for b in &ts[i + 1..] {
                assert!(!a.contains(b.as_str()) && !b.contains(a.as_str()));
            }
        }
    }
}
