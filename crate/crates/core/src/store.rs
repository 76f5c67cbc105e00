//! Content-addressed document store, provenance ledger and yield
//! accounting.
//!
//! Layout under the store root:
//!
//! ```text
//! blobs/ab/cd/abcd…   raw bytes named by their SHA-256
//! ledger.jsonl        one full DocumentRecord snapshot per line
//! ```
//!
//! The ledger is append-only; reopening a store replays it and keeps the
//! last snapshot per content hash.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::crawler::sha256_hex;
use crate::doc::{match_title, NormalizedDocument, TitleRecord};
use crate::error::{Error, Result};
use crate::urlutil::{parse_lenient, top_level_domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcquisitionPath {
    Path1Search,
    Path2Crawl,
}

impl AcquisitionPath {
    pub const ALL: [AcquisitionPath; 2] = [AcquisitionPath::Path1Search, AcquisitionPath::Path2Crawl];

    pub fn short_name(self) -> &'static str {
        match self {
            AcquisitionPath::Path1Search => "path1",
            AcquisitionPath::Path2Crawl => "path2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierLabel {
    Paper,
    NonPaper,
    Unclassified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_url: String,
    pub acquisition_path: AcquisitionPath,
    /// Query id for Path 1, seed URL for Path 2.
    pub origin: String,
    pub stored_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub content_hash: String,
    pub byte_size: u64,
    /// Every acquisition of these bytes, first one first.
    pub provenance: Vec<Provenance>,
    pub classifier_label: ClassifierLabel,
    pub classifier_score: Option<f64>,
    pub extracted_title: Option<TitleRecord>,
    pub matched_target: Option<String>,
}

impl DocumentRecord {
    pub fn first(&self) -> &Provenance {
        &self.provenance[0]
    }

    pub fn source_url(&self) -> &str {
        &self.first().source_url
    }

    pub fn stored_at(&self) -> u64 {
        self.first().stored_at
    }

    pub fn is_paper(&self) -> bool {
        self.classifier_label == ClassifierLabel::Paper
    }

    pub fn acquired_via(&self, path: AcquisitionPath) -> bool {
        self.provenance.iter().any(|p| p.acquisition_path == path)
    }

    pub fn first_via(&self, path: AcquisitionPath) -> Option<&Provenance> {
        self.provenance.iter().find(|p| p.acquisition_path == path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PutMeta {
    pub source_url: String,
    pub acquisition_path: AcquisitionPath,
    pub origin: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PutOutcome {
    pub record: DocumentRecord,
    /// False when the bytes were already stored.
    pub created: bool,
    pub blob_path: PathBuf,
}

struct State {
    records: HashMap<String, DocumentRecord>,
    order: Vec<String>,
    ledger: File,
}

pub struct DocumentStore {
    root: PathBuf,
    clock: Arc<dyn Clock>,
    state: Mutex<State>,
}

pub const LEDGER_FILE: &str = "ledger.jsonl";

impl DocumentStore {
    /// Opens or creates a store, replaying an existing ledger.
    pub fn open(root: impl Into<PathBuf>, clock: Arc<dyn Clock>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("blobs"))?;
        let ledger_path = root.join(LEDGER_FILE);
        let (records, order) = if ledger_path.exists() {
            replay_ledger(&ledger_path)?
        } else {
            (HashMap::new(), Vec::new())
        };
        let ledger = OpenOptions::new().create(true).append(true).open(&ledger_path)?;
        Ok(Self {
            root,
            clock,
            state: Mutex::new(State { records, order, ledger }),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn blob_path(&self, hash: &str) -> PathBuf {
        let (a, b) = (&hash[..2.min(hash.len())], &hash[2.min(hash.len())..4.min(hash.len())]);
        self.root.join("blobs").join(a).join(b).join(hash)
    }

    pub fn read_blob(&self, hash: &str) -> Result<Vec<u8>> {
        Ok(fs::read(self.blob_path(hash))?)
    }

    fn write_blob(&self, hash: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.blob_path(hash);
        if path.exists() {
            return Ok(path);
        }
        let dir = path.parent().expect("blob has parent");
        fs::create_dir_all(dir)?;
        static SEQ: AtomicU64 = AtomicU64::new(0);
        let seq = SEQ.fetch_add(1, Ordering::Relaxed);
        let tmp = dir.join(format!(".{hash}.{}.{seq}.tmp", std::process::id()));
        {
            let mut f = File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    fn append(state: &mut State, record: &DocumentRecord) -> Result<()> {
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        state.ledger.write_all(&line)?;
        state.ledger.flush()?;
        Ok(())
    }

    /// Stores `bytes` under their hash. Re-putting known bytes adds a
    /// provenance entry to the existing record instead of a new record.
    pub fn put(&self, bytes: &[u8], meta: PutMeta) -> Result<PutOutcome> {
        if bytes.is_empty() {
            return Err(Error::invalid("cannot store an empty document"));
        }
        let hash = sha256_hex(bytes);
        let blob_path = self.write_blob(&hash, bytes)?;
        let mut state = self.state.lock().expect("store lock");
        let provenance = Provenance {
            source_url: meta.source_url,
            acquisition_path: meta.acquisition_path,
            origin: meta.origin,
            stored_at: self.clock.now_ms(),
        };
        let created = !state.records.contains_key(&hash);
        let record = match state.records.get_mut(&hash) {
            Some(r) => {
                r.provenance.push(provenance);
                r.clone()
            }
            None => {
                let r = DocumentRecord {
                    content_hash: hash.clone(),
                    byte_size: bytes.len() as u64,
                    provenance: vec![provenance],
                    classifier_label: ClassifierLabel::Unclassified,
                    classifier_score: None,
                    extracted_title: None,
                    matched_target: None,
                };
                state.order.push(hash.clone());
                state.records.insert(hash.clone(), r.clone());
                r
            }
        };
        Self::append(&mut state, &record)?;
        Ok(PutOutcome {
            record,
            created,
            blob_path,
        })
    }

    /// Replaces the analysis fields of a stored record. Provenance stays
    /// as recorded by `put`.
    pub fn annotate(
        &self,
        hash: &str,
        label: ClassifierLabel,
        score: Option<f64>,
        title: Option<TitleRecord>,
        matched_target: Option<String>,
    ) -> Result<DocumentRecord> {
        if let Some(s) = score {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::Invariant(format!("classifier score {s} outside [0,1]")));
            }
        }
        let mut state = self.state.lock().expect("store lock");
        let record = state
            .records
            .get_mut(hash)
            .ok_or_else(|| Error::NotFound(format!("document {hash}")))?;
        record.classifier_label = label;
        record.classifier_score = score;
        record.extracted_title = title;
        record.matched_target = matched_target;
        let record = record.clone();
        Self::append(&mut state, &record)?;
        Ok(record)
    }

    pub fn get(&self, hash: &str) -> Option<DocumentRecord> {
        self.state.lock().expect("store lock").records.get(hash).cloned()
    }

    /// Records in first-stored order.
    pub fn records(&self) -> Vec<DocumentRecord> {
        let state = self.state.lock().expect("store lock");
        state.order.iter().map(|h| state.records[h].clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.state.lock().expect("store lock").order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Rebuilds records from a ledger, last snapshot per hash winning.
pub fn replay_ledger(path: &Path) -> Result<(HashMap<String, DocumentRecord>, Vec<String>)> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = HashMap::new();
    let mut order = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DocumentRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if rec.provenance.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: "record without provenance".into(),
            });
        }
        if !records.contains_key(&rec.content_hash) {
            order.push(rec.content_hash.clone());
        }
        records.insert(rec.content_hash.clone(), rec);
    }
    Ok((records, order))
}

/// Distinct normalized titles among paper-labeled records.
pub fn count_unique_titles<'a>(records: impl IntoIterator<Item = &'a DocumentRecord>) -> usize {
    unique_titles(records).len()
}

pub fn unique_titles<'a>(records: impl IntoIterator<Item = &'a DocumentRecord>) -> BTreeSet<String> {
    records
        .into_iter()
        .filter(|r| r.is_paper())
        .filter_map(|r| r.extracted_title.as_ref())
        .map(|t| t.normalized.clone())
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target {
    pub id: String,
    pub title: String,
    pub authors: Vec<String>,
}

/// First target, in list order, whose title and an author surname appear on
/// the document's first page.
pub fn first_matching_target<'a>(doc: &NormalizedDocument, targets: &'a [Target]) -> Option<&'a Target> {
    targets.iter().find(|t| match_title(doc, &t.title, &t.authors))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetMatchReport {
    /// Targets with at least one matching record.
    pub count: usize,
    /// `(target id, matching content hashes)` in target order, hits only.
    pub hits: Vec<(String, Vec<String>)>,
}

/// Matches paper-labeled documents against targets; each document counts
/// for at most one target.
pub fn match_against_targets(docs: &[(&DocumentRecord, &NormalizedDocument)], targets: &[Target]) -> TargetMatchReport {
    let mut hits: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (rec, doc) in docs.iter().filter(|(r, _)| r.is_paper()) {
        if let Some(i) = targets.iter().position(|t| match_title(doc, &t.title, &t.authors)) {
            hits.entry(i).or_default().push(rec.content_hash.clone());
        }
    }
    TargetMatchReport {
        count: hits.len(),
        hits: hits.into_iter().map(|(i, h)| (targets[i].id.clone(), h)).collect(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathManifest {
    pub queries_issued: u64,
    /// PDF acquisitions, counting byte-identical repeats.
    pub pdfs_fetched: u64,
    /// Distinct PDF byte streams.
    pub pdfs_unique: u64,
    /// Distinct documents labeled paper.
    pub papers_classified: u64,
    pub unique_titles: u64,
    /// Targets matched by at least one paper.
    pub target_matches: u64,
    /// Top-level domain of the first source URL of each paper.
    pub domain_histogram: BTreeMap<String, u64>,
}

impl PathManifest {
    pub fn papers_per_query(&self) -> f64 {
        if self.queries_issued == 0 {
            0.0
        } else {
            self.papers_classified as f64 / self.queries_issued as f64
        }
    }

    pub fn check_invariants(&self) -> Result<()> {
        let hist: u64 = self.domain_histogram.values().sum();
        if self.papers_classified > self.pdfs_unique
            || self.pdfs_unique > self.pdfs_fetched
            || self.target_matches > self.papers_classified
            || self.unique_titles > self.papers_classified
            || hist != self.papers_classified
        {
            return Err(Error::Invariant(format!("inconsistent manifest: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub path1: PathManifest,
    pub path2: PathManifest,
    pub overlap_unique_titles: u64,
    pub combined_unique_titles: u64,
}

impl Manifest {
    pub fn path(&self, p: AcquisitionPath) -> &PathManifest {
        match p {
            AcquisitionPath::Path1Search => &self.path1,
            AcquisitionPath::Path2Crawl => &self.path2,
        }
    }

    /// Recomputes all counters from store records. `queries` holds the
    /// number of queries issued per path, which records cannot reveal.
    pub fn from_records(records: &[DocumentRecord], queries: [u64; 2]) -> Self {
        let mut acc = ManifestAccumulator::default();
        for (p, q) in AcquisitionPath::ALL.into_iter().zip(queries) {
            acc.slice_mut(p).queries = q;
        }
        for r in records {
            for prov in &r.provenance {
                acc.pdf_fetched(prov.acquisition_path, &r.content_hash);
            }
            for p in AcquisitionPath::ALL {
                if let Some(first) = r.first_via(p) {
                    acc.classified(p, r, &first.source_url);
                }
            }
        }
        acc.finish()
    }
}

fn tld_of(url: &str) -> String {
    parse_lenient(url)
        .map(|u| top_level_domain(&u))
        .unwrap_or_else(|_| "unknown".into())
}

#[derive(Debug, Default, Clone)]
struct SliceAcc {
    queries: u64,
    fetched: u64,
    unique: BTreeSet<String>,
    papers: BTreeSet<String>,
    titles: BTreeSet<String>,
    targets: BTreeSet<String>,
    histogram: BTreeMap<String, u64>,
}

/// Serialized accumulator fed while a run progresses.
#[derive(Debug, Default, Clone)]
pub struct ManifestAccumulator {
    slices: [SliceAcc; 2],
}

impl ManifestAccumulator {
    fn slice_mut(&mut self, p: AcquisitionPath) -> &mut SliceAcc {
        &mut self.slices[p as usize]
    }

    pub fn query_issued(&mut self, p: AcquisitionPath) {
        self.slice_mut(p).queries += 1;
    }

    pub fn pdf_fetched(&mut self, p: AcquisitionPath, hash: &str) {
        let s = self.slice_mut(p);
        s.fetched += 1;
        s.unique.insert(hash.to_string());
    }

    /// Registers the final analysis of a document acquired via `p`;
    /// `source_url` is the URL it was first obtained from on that path.
    pub fn classified(&mut self, p: AcquisitionPath, record: &DocumentRecord, source_url: &str) {
        if !record.is_paper() {
            return;
        }
        let s = self.slice_mut(p);
        if !s.papers.insert(record.content_hash.clone()) {
            return;
        }
        *s.histogram.entry(tld_of(source_url)).or_default() += 1;
        if let Some(t) = &record.extracted_title {
            if !t.normalized.is_empty() {
                s.titles.insert(t.normalized.clone());
            }
        }
        if let Some(t) = &record.matched_target {
            s.targets.insert(t.clone());
        }
    }

    pub fn finish(&self) -> Manifest {
        let slice = |s: &SliceAcc| PathManifest {
            queries_issued: s.queries,
            pdfs_fetched: s.fetched,
            pdfs_unique: s.unique.len() as u64,
            papers_classified: s.papers.len() as u64,
            unique_titles: s.titles.len() as u64,
            target_matches: s.targets.len() as u64,
            domain_histogram: s.histogram.clone(),
        };
        let [a, b] = &self.slices;
        let overlap = a.titles.intersection(&b.titles).count() as u64;
        let combined = a.titles.union(&b.titles).count() as u64;
        Manifest {
            path1: slice(a),
            path2: slice(b),
            overlap_unique_titles: overlap,
            combined_unique_titles: combined,
        }
    }
}

pub const REPORT_TSV_HEADER: &str = "path\tqueries\tpdfs\tpapers\tunique_titles\tmatches";

#[derive(Serialize)]
struct ReportRow<'a> {
    path: &'static str,
    #[serde(flatten)]
    counts: &'a PathManifest,
    papers_per_query: f64,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    paths: Vec<ReportRow<'a>>,
    overlap_unique_titles: u64,
    combined_unique_titles: u64,
}

pub fn report_tsv(manifest: &Manifest) -> String {
    let mut out = format!("{REPORT_TSV_HEADER}\n");
    for p in AcquisitionPath::ALL {
        let m = manifest.path(p);
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            p.short_name(),
            m.queries_issued,
            m.pdfs_fetched,
            m.papers_classified,
            m.unique_titles,
            m.target_matches
        ));
    }
    out
}

pub fn domains_tsv(manifest: &Manifest) -> String {
    let mut out = String::from("path\tdomain\tpapers\n");
    for p in AcquisitionPath::ALL {
        let mut rows: Vec<(&String, &u64)> = manifest.path(p).domain_histogram.iter().collect();
        rows.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        for (d, n) in rows {
            out.push_str(&format!("{}\t{d}\t{n}\n", p.short_name()));
        }
    }
    out
}

/// Writes `report.tsv`, `domains.tsv` and `report.json` into `dir`.
pub fn export_report(manifest: &Manifest, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let json = ReportJson {
        paths: AcquisitionPath::ALL
            .into_iter()
            .map(|p| ReportRow {
                path: p.short_name(),
                counts: manifest.path(p),
                papers_per_query: manifest.path(p).papers_per_query(),
            })
            .collect(),
        overlap_unique_titles: manifest.overlap_unique_titles,
        combined_unique_titles: manifest.combined_unique_titles,
    };
    let files = [
        ("report.tsv", report_tsv(manifest).into_bytes()),
        ("domains.tsv", domains_tsv(manifest).into_bytes()),
        ("report.json", serde_json::to_vec_pretty(&json)?),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let p = dir.join(name);
        fs::write(&p, body)?;
        written.push(p);
    }
    Ok(written)
}
