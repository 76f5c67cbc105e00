//! Page/line text model of harvested documents.
//!
//! Documents arrive either pre-extracted (the JSON shape below) or as raw
//! bytes handed to a [`TextExtractor`]. Everything downstream (structural
//! features, title heuristics, first-page title matching) works on
//! [`NormalizedDocument`] only, so no PDF parser is needed to test it.
//!
//! ```json
//! {"doc_id": "p1", "byte_size": 183502, "pages": [["Title", "Author"], ["..."]]}
//! ```

use std::collections::HashSet;
use std::io::Write;
use std::process::{Command, Stdio};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{alnum_tokens, compact_key, normalize_phrase};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedDocument {
    pub doc_id: String,
    pub byte_size: u64,
    pub pages: Vec<Vec<String>>,
}

impl NormalizedDocument {
    /// Splits embedded line breaks, drops form feeds and requires a page.
    pub fn new(doc_id: impl Into<String>, byte_size: u64, pages: Vec<Vec<String>>) -> Result<Self> {
        let doc_id = doc_id.into();
        if pages.is_empty() {
            return Err(Error::Unparseable {
                doc_id,
                reason: "document has no pages".into(),
            });
        }
        let pages = pages
            .into_iter()
            .map(|page| {
                page.iter()
                    .flat_map(|l| split_lines(l))
                    .collect::<Vec<_>>()
            })
            .collect();
        Ok(Self {
            doc_id,
            byte_size,
            pages,
        })
    }

    pub fn lines(&self) -> impl Iterator<Item = &str> {
        self.pages.iter().flatten().map(String::as_str)
    }

    /// Lines with at least one non-whitespace character, in document order.
    pub fn content_lines(&self) -> impl Iterator<Item = &str> {
        self.lines().filter(|l| !l.trim().is_empty())
    }

    pub fn first_page_text(&self) -> String {
        self.pages.first().map(|p| p.join("\n")).unwrap_or_default()
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec(self)?)
    }
}

fn split_lines(s: &str) -> Vec<String> {
    s.replace("\r\n", "\n")
        .replace('\r', "\n")
        .split('\n')
        .map(|part| part.replace('\u{c}', ""))
        .collect()
}

/// Turns raw document bytes into pages of lines.
pub trait TextExtractor: Send + Sync {
    fn extract(&self, doc_id: &str, bytes: &[u8]) -> Result<Vec<Vec<String>>>;
}

/// Plain text with pages separated by form feeds (`pdftotext` output).
#[derive(Debug, Default, Clone, Copy)]
pub struct PlainTextExtractor;

impl TextExtractor for PlainTextExtractor {
    fn extract(&self, doc_id: &str, bytes: &[u8]) -> Result<Vec<Vec<String>>> {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::Unparseable {
            doc_id: doc_id.into(),
            reason: format!("not UTF-8: {e}"),
        })?;
        Ok(parse_form_feed_text(text))
    }
}

fn parse_form_feed_text(text: &str) -> Vec<Vec<String>> {
    let text = text.replace("\r\n", "\n").replace('\r', "\n");
    let mut pages: Vec<Vec<String>> = text
        .split('\u{c}')
        .map(|p| {
            let mut lines: Vec<String> = p.split('\n').map(str::to_string).collect();
            if lines.last().is_some_and(|l| l.is_empty()) {
                lines.pop();
            }
            lines
        })
        .collect();
    if pages.len() > 1 && pages.last().is_some_and(|p| p.is_empty()) {
        pages.pop();
    }
    pages
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandOutput {
    /// `{"pages": [[...]]}` on stdout.
    Json,
    /// Form-feed separated text on stdout.
    PlainText,
}

/// Pipes the document into an external tool and parses its stdout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandExtractor {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
    pub output: CommandOutput,
}

#[derive(Deserialize)]
struct PagesOnly {
    pages: Vec<Vec<String>>,
}

impl TextExtractor for CommandExtractor {
    fn extract(&self, doc_id: &str, bytes: &[u8]) -> Result<Vec<Vec<String>>> {
        let fail = |reason: String| Error::Unparseable {
            doc_id: doc_id.into(),
            reason,
        };
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| fail(format!("cannot run {}: {e}", self.program)))?;
        let mut stdin = child.stdin.take().expect("stdin piped");
        let input = bytes.to_vec();
        let writer = std::thread::spawn(move || stdin.write_all(&input));
        let out = child
            .wait_with_output()
            .map_err(|e| fail(format!("{} failed: {e}", self.program)))?;
        let _ = writer.join();
        if !out.status.success() {
            return Err(fail(format!("{} exited with {}", self.program, out.status)));
        }
        match self.output {
            CommandOutput::Json => serde_json::from_slice::<PagesOnly>(&out.stdout)
                .map(|p| p.pages)
                .map_err(|e| fail(format!("extractor output: {e}"))),
            CommandOutput::PlainText => PlainTextExtractor.extract(doc_id, &out.stdout),
        }
    }
}

pub enum DocumentSource<'a> {
    /// Bytes of the pre-extracted JSON shape.
    PreExtracted(&'a [u8]),
    /// Original document bytes (usually a PDF).
    Raw { doc_id: &'a str, bytes: &'a [u8] },
}

pub fn ingest_document(source: DocumentSource<'_>, extractor: Option<&dyn TextExtractor>) -> Result<NormalizedDocument> {
    match source {
        DocumentSource::PreExtracted(bytes) => {
            if bytes.is_empty() {
                return Err(Error::Unparseable {
                    doc_id: String::new(),
                    reason: "empty source".into(),
                });
            }
            let doc: NormalizedDocument = serde_json::from_slice(bytes).map_err(|e| Error::Unparseable {
                doc_id: String::new(),
                reason: e.to_string(),
            })?;
            NormalizedDocument::new(doc.doc_id, doc.byte_size, doc.pages)
        }
        DocumentSource::Raw { doc_id, bytes } => {
            if bytes.is_empty() {
                return Err(Error::Unparseable {
                    doc_id: doc_id.into(),
                    reason: "empty source".into(),
                });
            }
            let extractor = extractor.ok_or_else(|| Error::Unparseable {
                doc_id: doc_id.into(),
                reason: "no text extractor configured".into(),
            })?;
            let pages = extractor.extract(doc_id, bytes)?;
            NormalizedDocument::new(doc_id, bytes.len() as u64, pages)
        }
    }
}

/// Treats bytes that look like the pre-extracted JSON shape as such and
/// hands anything else to `extractor`.
pub fn ingest_bytes(doc_id: &str, bytes: &[u8], extractor: Option<&dyn TextExtractor>) -> Result<NormalizedDocument> {
    let trimmed = bytes
        .strip_prefix(b"\xEF\xBB\xBF")
        .unwrap_or(bytes)
        .iter()
        .position(|b| !b.is_ascii_whitespace())
        .map(|p| &bytes[p..]);
    match trimmed {
        Some(rest) if rest.first() == Some(&b'{') => {
            if let Ok(doc) = ingest_document(DocumentSource::PreExtracted(rest), None) {
                return Ok(doc);
            }
            ingest_document(DocumentSource::Raw { doc_id, bytes }, extractor)
        }
        _ => ingest_document(DocumentSource::Raw { doc_id, bytes }, extractor),
    }
}

pub const STRUCTURAL_FEATURE_NAMES: [&str; 24] = [
    "byte_size_kb",
    "page_count",
    "total_words",
    "total_lines",
    "avg_words_per_page",
    "avg_lines_per_page",
    "frac_short_lines",
    "frac_upper_lines",
    "count_numbered_section_headings",
    "count_bullet_lines",
    "contains_this_paper",
    "contains_this_thesis",
    "contains_this_book",
    "contains_abstract_heading",
    "contains_introduction_heading",
    "contains_acknowledgments",
    "contains_references_or_bibliography",
    "contains_cv_marker",
    "contains_chapter_marker",
    "contains_table_of_contents",
    "relpos_introduction",
    "relpos_acknowledgments",
    "relpos_references",
    "count_email_or_url_tokens",
];

pub const ABSENT_POSITION: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StructuralFeatures(pub [f64; 24]);

impl StructuralFeatures {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        STRUCTURAL_FEATURE_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.0[i])
    }

    pub fn names() -> &'static [&'static str] {
        &STRUCTURAL_FEATURE_NAMES
    }
}

fn numbered_heading_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\d+(\.\d+)*\.?\s+\p{Lu}").expect("valid regex"))
}

fn is_roman(tok: &str) -> bool {
    !tok.is_empty() && tok.len() <= 5 && tok.chars().all(|c| matches!(c, 'i' | 'v' | 'x'))
}

/// Normalized tokens of a heading candidate with leading section numbers
/// (`3`, `3.1`, `IV`) removed.
fn heading_tokens(line: &str) -> Vec<String> {
    let toks = alnum_tokens(line);
    let skip = toks
        .iter()
        .take_while(|t| t.chars().all(|c| c.is_ascii_digit()))
        .count();
    let mut toks = toks[skip..].to_vec();
    if skip == 0 && toks.len() > 1 && is_roman(&toks[0]) && line.trim_start().chars().next().is_some_and(char::is_uppercase) {
        toks.remove(0);
    }
    toks
}

/// True when the line's normalized form equals or starts with one of the
/// heading phrases (matched on whole words).
fn is_heading(line: &str, phrases: &[&[&str]]) -> bool {
    let toks = heading_tokens(line);
    phrases.iter().any(|p| {
        toks.len() >= p.len() && toks.iter().zip(p.iter()).all(|(a, b)| a == b)
    })
}

const INTRODUCTION: &[&[&str]] = &[&["introduction"]];
const ABSTRACT: &[&[&str]] = &[&["abstract"]];
const ACKNOWLEDGMENTS: &[&[&str]] = &[
    &["acknowledgments"],
    &["acknowledgements"],
    &["acknowledgment"],
    &["acknowledgement"],
];
const REFERENCES: &[&[&str]] = &[&["references"], &["bibliography"]];
const CONTENTS: &[&[&str]] = &[&["contents"], &["table", "of", "contents"]];
const CV_HEADINGS: &[&[&str]] = &[&["curriculum", "vitae"], &["cv"], &["resume"], &["vita"]];

fn is_bullet(line: &str) -> bool {
    let t = line.trim_start();
    let mut chars = t.chars();
    matches!(chars.next(), Some('•' | '◦' | '▪' | '‣' | '-' | '*' | '–' | '·'))
        && chars.next().is_some_and(char::is_whitespace)
}

fn is_email_or_url(word: &str) -> bool {
    let w = word.trim_matches(|c: char| matches!(c, '(' | ')' | '<' | '>' | ',' | ';' | '[' | ']'));
    let lower = w.to_lowercase();
    if lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.") {
        return true;
    }
    match w.split_once('@') {
        Some((user, host)) => !user.is_empty() && host.contains('.') && !host.ends_with('.'),
        None => false,
    }
}

fn is_upper_line(line: &str) -> bool {
    let mut any = false;
    for c in line.chars().filter(|c| c.is_alphabetic()) {
        any = true;
        if !c.is_uppercase() {
            return false;
        }
    }
    any
}

fn contains_phrase(padded_text: &str, phrase: &str) -> bool {
    padded_text.contains(&format!(" {phrase} "))
}

/// Computes the fixed-order 24-feature vector.
///
/// Line-based counts use content lines only (blank lines are layout noise).
/// `relpos_X` is the index of the first heading line of section `X` among
/// content lines divided by the number of content lines, or `-1` when the
/// section is absent.
pub fn extract_structural_features(doc: &NormalizedDocument) -> StructuralFeatures {
    let lines: Vec<&str> = doc.content_lines().collect();
    let n_lines = lines.len();
    let page_count = doc.pages.len();
    let word_counts: Vec<usize> = lines.iter().map(|l| l.split_whitespace().count()).collect();
    let total_words: usize = word_counts.iter().sum();
    let frac = |count: usize| if n_lines == 0 { 0.0 } else { count as f64 / n_lines as f64 };
    let first = |phrases: &[&[&str]]| lines.iter().position(|l| is_heading(l, phrases));
    let relpos = |pos: Option<usize>| match pos {
        Some(i) => i as f64 / n_lines as f64,
        None => ABSENT_POSITION,
    };
    let flag = |b: bool| if b { 1.0 } else { 0.0 };

    let padded = format!(" {} ", normalize_phrase(&lines.join(" ")));
    let intro = first(INTRODUCTION);
    let ack = first(ACKNOWLEDGMENTS);
    let refs = first(REFERENCES);
    let chapter = lines.iter().any(|l| {
        let t = alnum_tokens(l);
        t.len() >= 2 && t[0] == "chapter" && (t[1].chars().all(|c| c.is_ascii_digit()) || is_roman(&t[1]))
    });
    let cv = contains_phrase(&padded, "curriculum vitae") || first(CV_HEADINGS).is_some();
    let emails_urls = lines
        .iter()
        .flat_map(|l| l.split_whitespace())
        .filter(|w| is_email_or_url(w))
        .count();

    let p = page_count.max(1) as f64;
    StructuralFeatures([
        doc.byte_size as f64 / 1024.0,
        page_count as f64,
        total_words as f64,
        n_lines as f64,
        total_words as f64 / p,
        n_lines as f64 / p,
        frac(word_counts.iter().filter(|&&w| w < 4).count()),
        frac(lines.iter().filter(|l| is_upper_line(l)).count()),
        lines
            .iter()
            .filter(|l| numbered_heading_re().is_match(l.trim()) && l.split_whitespace().count() <= 8)
            .count() as f64,
        lines.iter().filter(|l| is_bullet(l)).count() as f64,
        flag(contains_phrase(&padded, "this paper")),
        flag(contains_phrase(&padded, "this thesis")),
        flag(contains_phrase(&padded, "this book")),
        flag(first(ABSTRACT).is_some()),
        flag(intro.is_some()),
        flag(ack.is_some()),
        flag(refs.is_some()),
        flag(cv),
        flag(chapter),
        flag(first(CONTENTS).is_some()),
        relpos(intro),
        relpos(ack),
        relpos(refs),
        emails_urls as f64,
    ])
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TitleRecord {
    pub raw: String,
    pub normalized: String,
}

impl TitleRecord {
    pub fn new(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let normalized = normalize_phrase(&raw);
        Self { raw, normalized }
    }
}

const TITLE_MIN_WORDS: usize = 3;
const TITLE_MAX_WORDS: usize = 30;
const TITLE_MAX_LINES: usize = 3;

/// Title guess: the first blank-line-delimited block on page 1, before any
/// `Abstract` line, that has 1–3 lines and 3–30 words. Falls back to the
/// first non-empty line.
pub fn extract_title_heuristic(doc: &NormalizedDocument) -> Result<TitleRecord> {
    let page = doc.pages.first().map(Vec::as_slice).unwrap_or_default();
    let fallback = page
        .iter()
        .map(|l| l.trim())
        .find(|l| !l.is_empty())
        .ok_or_else(|| Error::NoTitle(doc.doc_id.clone()))?;

    let mut blocks: Vec<Vec<&str>> = vec![Vec::new()];
    for line in page {
        let line = line.trim();
        if normalize_phrase(line) == "abstract" {
            break;
        }
        if line.is_empty() {
            if !blocks.last().is_some_and(Vec::is_empty) {
                blocks.push(Vec::new());
            }
        } else {
            blocks.last_mut().expect("non-empty").push(line);
        }
    }
    let title = blocks
        .iter()
        .filter(|b| (1..=TITLE_MAX_LINES).contains(&b.len()))
        .map(|b| b.join(" "))
        .find(|t| (TITLE_MIN_WORDS..=TITLE_MAX_WORDS).contains(&t.split_whitespace().count()))
        .unwrap_or_else(|| fallback.to_string());
    Ok(TitleRecord::new(crate::text::collapse_whitespace(&title)))
}

/// True when the title appears on the first page (ignoring case, spacing
/// and punctuation) and so does the last name token of at least one author.
pub fn match_title(doc: &NormalizedDocument, title: &str, authors: &[String]) -> bool {
    let key = compact_key(title);
    if key.is_empty() {
        return false;
    }
    let first_page = doc.first_page_text();
    if !compact_key(&first_page).contains(&key) {
        return false;
    }
    let words: HashSet<String> = alnum_tokens(&first_page).into_iter().collect();
    authors
        .iter()
        .filter_map(|a| alnum_tokens(a).pop())
        .any(|surname| words.contains(&surname))
}
