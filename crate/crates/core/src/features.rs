//! Feature extraction for ranking author-name search results.
//!
//! Each search result becomes a sparse binary vector over four term
//! dictionaries (URL path tokens, DOMAIN tokens, TITLE and SNIPPET words)
//! followed by two name-match features, `hasMatch` and `fracMatch`, at the
//! last two indices.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search::{Query, QueryKind, ResultPage, SearchResult};
use crate::text::alnum_tokens;
use crate::urlutil::parse_lenient;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FeatureSpace {
    Url,
    Domain,
    Title,
    Snippet,
}

impl FeatureSpace {
    pub const ALL: [FeatureSpace; 4] = [
        FeatureSpace::Url,
        FeatureSpace::Domain,
        FeatureSpace::Title,
        FeatureSpace::Snippet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureSpace::Url => "URL",
            FeatureSpace::Domain => "DOMAIN",
            FeatureSpace::Title => "TITLE",
            FeatureSpace::Snippet => "SNIPPET",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|sp| sp.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UrlTokens {
    pub domain: Vec<String>,
    pub path: Vec<String>,
    /// `tilde[i]` is true when `path[i]` carried a leading `~` (a user
    /// directory such as `/~soumen`).
    pub tilde: Vec<bool>,
}

impl UrlTokens {
    pub fn all(&self) -> impl Iterator<Item = &str> {
        self.domain.iter().chain(self.path.iter()).map(String::as_str)
    }
}

/// Splits the host on `.` and the path on `/`. Scheme, port, query string
/// and fragment are discarded; tokens are lowercased.
pub fn tokenize_url(url: &str) -> Result<UrlTokens> {
    let parsed = parse_lenient(url)?;
    let host = parsed.host_str().unwrap_or_default().trim_end_matches('.');
    let domain = host
        .split('.')
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect();
    let mut path = Vec::new();
    let mut tilde = Vec::new();
    for seg in parsed.path().split('/') {
        let lower = seg.to_lowercase();
        let (tok, had_tilde) = if let Some(rest) = lower.strip_prefix('~') {
            (rest.to_string(), true)
        } else if let Some(rest) = lower.strip_prefix("%7e") {
            (rest.to_string(), true)
        } else {
            (lower, false)
        };
        if !tok.is_empty() {
            path.push(tok);
            tilde.push(had_tilde);
        }
    }
    Ok(UrlTokens {
        domain,
        path,
        tilde,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NameMatchFeatures {
    pub has_match: bool,
    pub frac_match: f64,
}

const MIN_SUBSTRING_MATCH: usize = 3;

fn name_token_matches(name_tok: &str, url_tok: &str) -> bool {
    name_tok == url_tok
        || (name_tok.chars().count() >= MIN_SUBSTRING_MATCH && url_tok.contains(name_tok))
}

fn name_match_from_tokens(name_tokens: &[String], url: &UrlTokens) -> NameMatchFeatures {
    let matched = name_tokens
        .iter()
        .filter(|n| url.all().any(|u| name_token_matches(n, u)))
        .count();
    let frac_match = matched as f64 / name_tokens.len() as f64;
    NameMatchFeatures {
        has_match: matched > 0,
        frac_match,
    }
}

/// A name token matches when it equals a URL token or, if it is at least
/// three characters long, occurs inside one (`nina` in `~ninan`).
pub fn name_match_features(author_name: &str, url: &str) -> Result<NameMatchFeatures> {
    let name_tokens = alnum_tokens(author_name);
    if name_tokens.is_empty() {
        return Err(Error::invalid("author name has no tokens"));
    }
    let url_tokens = tokenize_url(url)?;
    Ok(name_match_from_tokens(&name_tokens, &url_tokens))
}

/// Distinct tokens of one result in each space, in first-seen order.
fn result_space_tokens(result: &SearchResult) -> Result<[Vec<String>; 4]> {
    fn dedup(it: impl IntoIterator<Item = String>) -> Vec<String> {
        let mut seen = HashSet::new();
        it.into_iter().filter(|t| seen.insert(t.clone())).collect()
    }
    let url = tokenize_url(&result.url)?;
    Ok([
        dedup(url.path),
        dedup(url.domain),
        dedup(alnum_tokens(&result.page_title)),
        dedup(alnum_tokens(&result.snippet)),
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDictionary {
    pub space: FeatureSpace,
    pub min_df: u32,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    doc_freq: HashMap<String, u32>,
}

impl FeatureDictionary {
    fn from_parts(space: FeatureSpace, min_df: u32, tokens: Vec<String>, doc_freq: Vec<u32>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let doc_freq = tokens.iter().cloned().zip(doc_freq).collect();
        Self {
            space,
            min_df,
            tokens,
            index,
            doc_freq,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn doc_freq(&self, token: &str) -> Option<u32> {
        self.doc_freq.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DictionaryConfig {
    pub url_min_df: u32,
    pub domain_min_df: u32,
    pub title_min_df: u32,
    pub snippet_min_df: u32,
}

impl Default for DictionaryConfig {
    fn default() -> Self {
        Self {
            url_min_df: 1,
            domain_min_df: 1,
            title_min_df: 2,
            snippet_min_df: 2,
        }
    }
}

impl DictionaryConfig {
    pub fn uniform(min_df: u32) -> Self {
        Self {
            url_min_df: min_df,
            domain_min_df: min_df,
            title_min_df: min_df,
            snippet_min_df: min_df,
        }
    }

    fn min_df(&self, space: FeatureSpace) -> u32 {
        match space {
            FeatureSpace::Url => self.url_min_df,
            FeatureSpace::Domain => self.domain_min_df,
            FeatureSpace::Title => self.title_min_df,
            FeatureSpace::Snippet => self.snippet_min_df,
        }
    }
}

/// The four term dictionaries laid out back to back, then the two
/// name-match slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "DictionariesFile", try_from = "DictionariesFile")]
pub struct FeatureDictionaries {
    dicts: [FeatureDictionary; 4],
    offsets: [usize; 4],
}

#[derive(Serialize, Deserialize)]
struct DictFile {
    min_df: u32,
    tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    doc_freq: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(transparent)]
struct DictionariesFile(BTreeMap<String, DictFile>);

impl From<FeatureDictionaries> for DictionariesFile {
    fn from(d: FeatureDictionaries) -> Self {
        DictionariesFile(
            d.dicts
                .into_iter()
                .map(|dict| {
                    let doc_freq = dict.tokens.iter().map(|t| dict.doc_freq[t]).collect();
                    (
                        dict.space.name().to_string(),
                        DictFile {
                            min_df: dict.min_df,
                            tokens: dict.tokens,
                            doc_freq,
                        },
                    )
                })
                .collect(),
        )
    }
}

impl TryFrom<DictionariesFile> for FeatureDictionaries {
    type Error = String;

    fn try_from(mut f: DictionariesFile) -> std::result::Result<Self, String> {
        for key in f.0.keys() {
            if FeatureSpace::from_name(key).is_none() {
                return Err(format!("unknown feature space `{key}`"));
            }
        }
        let mut take = |space: FeatureSpace| -> std::result::Result<FeatureDictionary, String> {
            let df = f
                .0
                .remove(space.name())
                .ok_or_else(|| format!("missing feature space `{}`", space.name()))?;
            let doc_freq = if df.doc_freq.is_empty() {
                vec![df.min_df; df.tokens.len()]
            } else if df.doc_freq.len() == df.tokens.len() {
                df.doc_freq
            } else {
                return Err(format!("doc_freq length mismatch in `{}`", space.name()));
            };
            let unique: HashSet<_> = df.tokens.iter().collect();
            if unique.len() != df.tokens.len() {
                return Err(format!("duplicate tokens in `{}`", space.name()));
            }
            Ok(FeatureDictionary::from_parts(space, df.min_df, df.tokens, doc_freq))
        };
        let dicts = [
            take(FeatureSpace::Url)?,
            take(FeatureSpace::Domain)?,
            take(FeatureSpace::Title)?,
            take(FeatureSpace::Snippet)?,
        ];
        Ok(FeatureDictionaries::new(dicts))
    }
}

impl FeatureDictionaries {
    fn new(dicts: [FeatureDictionary; 4]) -> Self {
        let mut offsets = [0; 4];
        let mut acc = 0;
        for (i, d) in dicts.iter().enumerate() {
            offsets[i] = acc;
            acc += d.len();
        }
        Self { dicts, offsets }
    }

    pub fn get(&self, space: FeatureSpace) -> &FeatureDictionary {
        &self.dicts[space as usize]
    }

    pub fn offset(&self, space: FeatureSpace) -> usize {
        self.offsets[space as usize]
    }

    /// Number of term features across all four spaces.
    pub fn term_dim(&self) -> usize {
        self.dicts.iter().map(FeatureDictionary::len).sum()
    }

    /// Full vector dimension, including the two name-match features.
    pub fn dim(&self) -> usize {
        self.term_dim() + 2
    }

    pub fn has_match_index(&self) -> usize {
        self.term_dim()
    }

    pub fn frac_match_index(&self) -> usize {
        self.term_dim() + 1
    }

    pub fn feature_index(&self, space: FeatureSpace, token: &str) -> Option<usize> {
        self.get(space).index_of(token).map(|i| i + self.offset(space))
    }

    /// `SPACE:token`, `NAME:hasMatch` or `NAME:fracMatch`.
    pub fn feature_name(&self, index: usize) -> Option<String> {
        if index == self.has_match_index() {
            return Some("NAME:hasMatch".into());
        }
        if index == self.frac_match_index() {
            return Some("NAME:fracMatch".into());
        }
        FeatureSpace::ALL.into_iter().find_map(|sp| {
            let off = self.offset(sp);
            let d = self.get(sp);
            (index >= off && index < off + d.len())
                .then(|| format!("{}:{}", sp.name(), d.tokens[index - off]))
        })
    }

    pub fn feature_names(&self) -> Vec<String> {
        (0..self.dim())
            .map(|i| self.feature_name(i).expect("index within dim"))
            .collect()
    }
}

/// Builds the four dictionaries from every result of every page. A token's
/// document frequency is the number of results containing it.
pub fn build_dictionaries<'a>(
    pages: impl IntoIterator<Item = &'a ResultPage>,
    config: &DictionaryConfig,
) -> Result<FeatureDictionaries> {
    if FeatureSpace::ALL.iter().any(|s| config.min_df(*s) == 0) {
        return Err(Error::invalid("min_df must be at least 1"));
    }
    let mut order: [Vec<String>; 4] = Default::default();
    let mut counts: [HashMap<String, u32>; 4] = Default::default();
    let mut n_pages = 0;
    for page in pages {
        n_pages += 1;
        for result in &page.results {
            for (i, toks) in result_space_tokens(result)?.into_iter().enumerate() {
                for tok in toks {
                    let c = counts[i].entry(tok.clone()).or_insert(0);
                    if *c == 0 {
                        order[i].push(tok);
                    }
                    *c += 1;
                }
            }
        }
    }
    if n_pages == 0 {
        return Err(Error::invalid("cannot build dictionaries from an empty corpus"));
    }
    let dicts = FeatureSpace::ALL.map(|space| {
        let min_df = config.min_df(space);
        let i = space as usize;
        let (tokens, dfs): (Vec<_>, Vec<_>) = order[i]
            .iter()
            .filter_map(|t| {
                let df = counts[i][t];
                (df >= min_df).then(|| (t.clone(), df))
            })
            .unzip();
        FeatureDictionary::from_parts(space, min_df, tokens, dfs)
    });
    Ok(FeatureDictionaries::new(dicts))
}

/// Sparse vector with strictly increasing indices and no explicit zeros.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SparseVector(Vec<(u32, f64)>);

impl SparseVector {
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        pairs.dedup_by_key(|p| p.0);
        pairs.retain(|p| p.1 != 0.0);
        SparseVector(pairs)
    }

    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector(
            values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i as u32, *v))
                .collect(),
        )
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.0.iter().map(|&(i, v)| (i as usize, v))
    }

    pub fn get(&self, index: usize) -> f64 {
        self.0
            .binary_search_by_key(&(index as u32), |p| p.0)
            .map(|pos| self.0[pos].1)
            .unwrap_or(0.0)
    }

    pub fn nnz(&self) -> usize {
        self.0.len()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.last().map(|p| p.0 as usize)
    }

    /// Dot product with a dense weight vector; indices beyond it count as 0.
    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.0
            .iter()
            .filter_map(|&(i, v)| weights.get(i as usize).map(|w| w * v))
            .sum()
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (i, v) in self.iter() {
            if i < dim {
                out[i] = v;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Homepage,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankInstance {
    pub query_id: String,
    pub result_rank: u32,
    pub vector: SparseVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreferencePair {
    pub query_id: String,
    pub preferred: RankInstance,
    pub other: RankInstance,
}

/// Feature vector for one author-query result. Tokens missing from the
/// dictionaries are ignored.
pub fn vectorize(query: &Query, result: &SearchResult, dicts: &FeatureDictionaries) -> Result<RankInstance> {
    if query.kind != QueryKind::Author {
        return Err(Error::invalid("homepage features need an author query"));
    }
    let name_tokens = alnum_tokens(&query.raw_text);
    if name_tokens.is_empty() {
        return Err(Error::invalid("author name has no tokens"));
    }
    let mut pairs = Vec::new();
    for (i, toks) in result_space_tokens(result)?.into_iter().enumerate() {
        let space = FeatureSpace::ALL[i];
        for tok in toks {
            if let Some(idx) = dicts.feature_index(space, &tok) {
                pairs.push((idx as u32, 1.0));
            }
        }
    }
    let nm = name_match_from_tokens(&name_tokens, &tokenize_url(&result.url)?);
    if nm.has_match {
        pairs.push((dicts.has_match_index() as u32, 1.0));
    }
    pairs.push((dicts.frac_match_index() as u32, nm.frac_match));
    Ok(RankInstance {
        query_id: result.query_id.clone(),
        result_rank: result.rank,
        vector: SparseVector::from_pairs(pairs),
        label: None,
    })
}

/// A result page with a homepage/other label per result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPage {
    pub page: ResultPage,
    pub labels: Vec<Label>,
}

impl LabeledPage {
    pub fn new(page: ResultPage, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != page.results.len() {
            return Err(Error::InvalidLabeling(format!(
                "{} labels for {} results",
                labels.len(),
                page.results.len()
            )));
        }
        Ok(Self { page, labels })
    }

    /// Rank of the single homepage result.
    pub fn homepage_rank(&self) -> Result<u32> {
        let mut positives = self
            .labels
            .iter()
            .zip(&self.page.results)
            .filter(|(l, _)| **l == Label::Homepage)
            .map(|(_, r)| r.rank);
        match (positives.next(), positives.next()) {
            (Some(rank), None) => Ok(rank),
            (None, _) => Err(Error::InvalidLabeling(format!(
                "query `{}` has no homepage result",
                self.page.query.raw_text
            ))),
            (Some(_), Some(_)) => Err(Error::InvalidLabeling(format!(
                "query `{}` has several homepage results",
                self.page.query.raw_text
            ))),
        }
    }

    pub fn vectorize(&self, dicts: &FeatureDictionaries) -> Result<Vec<RankInstance>> {
        self.page
            .results
            .iter()
            .zip(&self.labels)
            .map(|(r, l)| {
                let mut inst = vectorize(&self.page.query, r, dicts)?;
                inst.label = Some(*l);
                Ok(inst)
            })
            .collect()
    }
}

/// One `(homepage, other)` pair per non-homepage result of a query. No
/// preferences are expressed among the non-homepages.
pub fn build_preference_pairs(instances: &[RankInstance]) -> Result<Vec<PreferencePair>> {
    let mut homepage = None;
    for inst in instances {
        match inst.label {
            Some(Label::Homepage) if homepage.is_some() => {
                return Err(Error::InvalidLabeling("several homepage results".into()))
            }
            Some(Label::Homepage) => homepage = Some(inst),
            Some(Label::Other) => {}
            None => return Err(Error::InvalidLabeling("unlabeled instance".into())),
        }
    }
    let homepage = homepage.ok_or_else(|| Error::InvalidLabeling("no homepage result".into()))?;
    if instances.iter().any(|i| i.query_id != homepage.query_id) {
        return Err(Error::InvalidLabeling("instances span several queries".into()));
    }
    Ok(instances
        .iter()
        .filter(|i| i.label == Some(Label::Other))
        .map(|other| PreferencePair {
            query_id: homepage.query_id.clone(),
            preferred: homepage.clone(),
            other: other.clone(),
        })
        .collect())
}

/// One line of a labeled homepage-search file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledQueryLine {
    pub name: String,
    pub results: Vec<LabeledHit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledHit {
    pub rank: u32,
    pub url: String,
    pub title: String,
    pub snippet: String,
    pub homepage: bool,
}

impl LabeledQueryLine {
    pub fn to_labeled_page(&self) -> Result<LabeledPage> {
        let query = Query::author(&self.name)?.with_top_k(self.results.len().max(1))?;
        let mut hits = self.results.clone();
        hits.sort_by_key(|h| h.rank);
        let results = hits
            .iter()
            .enumerate()
            .map(|(i, h)| SearchResult {
                query_id: query.id.clone(),
                rank: i as u32 + 1,
                url: h.url.clone(),
                page_title: h.title.clone(),
                snippet: h.snippet.clone(),
            })
            .collect();
        let labels = hits
            .iter()
            .map(|h| if h.homepage { Label::Homepage } else { Label::Other })
            .collect();
        let page = LabeledPage::new(ResultPage::new(query, results, 0)?, labels)?;
        page.homepage_rank()?;
        Ok(page)
    }
}

/// Reads a JSON-lines labeled homepage file. Every query must have exactly
/// one homepage result; errors name the offending line.
pub fn load_labeled_pages(path: impl AsRef<Path>) -> Result<Vec<LabeledPage>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let at = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let rec: LabeledQueryLine = serde_json::from_str(&line).map_err(|e| at(e.to_string()))?;
        let page = rec.to_labeled_page().map_err(|e| match e {
            Error::InvalidLabeling(m) => Error::InvalidLabeling(format!("{}:{}: {m}", path.display(), i + 1)),
            other => at(other.to_string()),
        })?;
        out.push(page);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blitzer_page() -> LabeledPage {
        let q = Query::author("John Blitzer").unwrap();
        let rows = [
            ("research.google.com/pubs/author14735.html", "John Blitzer - Research at Google", "Research publications by John Blitzer"),
            ("john.blitzer.com", "John Blitzer's Home Page", "I am a professor"),
            ("https://www.linkedin.com/pub/john-blitzer/5/606/425", "John Blitzer | LinkedIn", "View John Blitzer's professional profile on LinkedIn"),
            ("http://dblp.uni-trier.de/pers/hd/b/Blitzer:John", "dblp: John Blitzer", "List of computer science publications by John Blitzer"),
        ];
        let results = rows
            .iter()
            .enumerate()
            .map(|(i, (u, t, s))| SearchResult {
                query_id: q.id.clone(),
                rank: i as u32 + 1,
                url: u.to_string(),
                page_title: t.to_string(),
                snippet: s.to_string(),
            })
            .collect();
        let page = ResultPage::new(q, results, 0).unwrap();
        LabeledPage::new(page, vec![Label::Other, Label::Homepage, Label::Other, Label::Other]).unwrap()
    }

    #[test]
    fn tokenize_examples() {
        let t = tokenize_url("www.cse.iitb.ac.in/~soumen").unwrap();
        assert_eq!(t.domain, vec!["www", "cse", "iitb", "ac", "in"]);
        assert_eq!(t.path, vec!["soumen"]);
        assert_eq!(t.tilde, vec![true]);

        let t = tokenize_url("https://john.blitzer.com").unwrap();
        assert_eq!(t.domain, vec!["john", "blitzer", "com"]);
        assert!(t.path.is_empty());

        assert!(matches!(tokenize_url("http:///"), Err(Error::InvalidUrl { .. })));
    }

    #[test]
    fn tokenize_lowercases_and_drops_query() {
        let t = tokenize_url("HTTP://Dblp.Uni-Trier.DE/pers/hd/b/Blitzer:John?x=1#f").unwrap();
        assert_eq!(t.domain, vec!["dblp", "uni-trier", "de"]);
        assert_eq!(t.path, vec!["pers", "hd", "b", "blitzer:john"]);
    }

    #[test]
    fn name_match_examples() {
        let nm = name_match_features("Soumen Chakrabarti", "www.cse.iitb.ac.in/~soumen").unwrap();
        assert!(nm.has_match);
        assert_eq!(nm.frac_match, 0.5);

        let nm = name_match_features("John Blitzer", "https://www.linkedin.com/pub/john-blitzer/5/606/425").unwrap();
        assert!(nm.has_match);
        assert_eq!(nm.frac_match, 1.0);

        let nm = name_match_features("Ada Lovelace", "example.com/page").unwrap();
        assert!(!nm.has_match);
        assert_eq!(nm.frac_match, 0.0);

        let nm = name_match_features("Nina Narodytska", "http://www.cse.unsw.edu.au/~ninan/").unwrap();
        assert_eq!(nm.frac_match, 0.5);

        assert!(matches!(name_match_features("  ", "x.org"), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn short_name_tokens_need_exact_match() {
        // "li" is a substring of "linkedin" but too short to count.
        let nm = name_match_features("Li Wei", "linkedin.com/in/someone").unwrap();
        assert!(!nm.has_match);
        let nm = name_match_features("Li Wei", "people.x.edu/li").unwrap();
        assert_eq!(nm.frac_match, 0.5);
    }

    #[test]
    fn blitzer_domain_dictionary() {
        let page = blitzer_page();
        let dicts = build_dictionaries([&page.page], &DictionaryConfig::uniform(1)).unwrap();
        let domain = dicts.get(FeatureSpace::Domain);
        for tok in ["research", "google", "com", "john", "blitzer", "linkedin", "dblp", "uni-trier", "de", "www"] {
            assert!(domain.contains(tok), "missing {tok}");
        }
        assert_eq!(domain.len(), 10);
        assert_eq!(domain.doc_freq("com"), Some(3));
        assert_eq!(domain.index_of("research"), Some(0));
    }

    #[test]
    fn min_df_drops_rare_tokens() {
        let page = blitzer_page();
        let dicts = build_dictionaries([&page.page], &DictionaryConfig::uniform(2)).unwrap();
        assert!(!dicts.get(FeatureSpace::Snippet).contains("professor"));
        assert!(dicts.get(FeatureSpace::Snippet).contains("blitzer"));
        assert!(dicts.get(FeatureSpace::Domain).contains("com"));
    }

    #[test]
    fn dictionaries_are_deterministic() {
        let page = blitzer_page();
        let a = build_dictionaries([&page.page], &DictionaryConfig::default()).unwrap();
        let b = build_dictionaries([&page.page], &DictionaryConfig::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn empty_corpus_rejected() {
        let none: Vec<&ResultPage> = Vec::new();
        assert!(matches!(
            build_dictionaries(none, &DictionaryConfig::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn dictionary_json_layout() {
        let page = blitzer_page();
        let dicts = build_dictionaries([&page.page], &DictionaryConfig::uniform(1)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&dicts).unwrap();
        assert_eq!(v["DOMAIN"]["min_df"], 1);
        assert_eq!(v["DOMAIN"]["tokens"][0], "research");
        let back: FeatureDictionaries = serde_json::from_value(v.clone()).unwrap();
        assert_eq!(back, dicts);

        // The minimal layout without doc_freq still loads.
        let mut minimal = v;
        for sp in ["URL", "DOMAIN", "TITLE", "SNIPPET"] {
            minimal[sp].as_object_mut().unwrap().remove("doc_freq");
        }
        let loaded: FeatureDictionaries = serde_json::from_value(minimal).unwrap();
        assert_eq!(loaded.feature_names(), dicts.feature_names());
    }

    #[test]
    fn vectorize_blitzer_homepage() {
        let page = blitzer_page();
        let dicts = build_dictionaries([&page.page], &DictionaryConfig::uniform(1)).unwrap();
        let inst = vectorize(&page.page.query, &page.page.results[1], &dicts).unwrap();
        assert_eq!(inst.vector.get(dicts.has_match_index()), 1.0);
        assert_eq!(inst.vector.get(dicts.frac_match_index()), 1.0);
        for tok in ["john", "blitzer", "com"] {
            let idx = dicts.feature_index(FeatureSpace::Domain, tok).unwrap();
            assert_eq!(inst.vector.get(idx), 1.0);
        }
        let www = dicts.feature_index(FeatureSpace::Domain, "www").unwrap();
        assert_eq!(inst.vector.get(www), 0.0);
        assert!(inst.vector.max_index().unwrap() < dicts.dim());
    }

    #[test]
    fn vectorize_empty_snippet_and_oov_title() {
        let page = blitzer_page();
        let dicts = build_dictionaries([&page.page], &DictionaryConfig::uniform(1)).unwrap();
        let mut r = page.page.results[1].clone();
        r.snippet.clear();
        r.page_title = "zzqx unseenword".into();
        let inst = vectorize(&page.page.query, &r, &dicts).unwrap();
        for space in [FeatureSpace::Title, FeatureSpace::Snippet] {
            let lo = dicts.offset(space);
            let hi = lo + dicts.get(space).len();
            assert!(inst.vector.iter().all(|(i, _)| i < lo || i >= hi));
        }
    }

    #[test]
    fn vectorize_requires_author_query() {
        let page = blitzer_page();
        let dicts = build_dictionaries([&page.page], &DictionaryConfig::uniform(1)).unwrap();
        let q = Query::title("A paper").unwrap();
        assert!(vectorize(&q, &page.page.results[0], &dicts).is_err());
    }

    #[test]
    fn blitzer_preference_pairs() {
        let page = blitzer_page();
        let dicts = build_dictionaries([&page.page], &DictionaryConfig::uniform(1)).unwrap();
        let pairs = build_preference_pairs(&page.vectorize(&dicts).unwrap()).unwrap();
        assert_eq!(pairs.len(), 3);
        assert!(pairs.iter().all(|p| p.preferred.result_rank == 2));
        let others: Vec<_> = pairs.iter().map(|p| p.other.result_rank).collect();
        assert_eq!(others, vec![1, 3, 4]);
    }

    #[test]
    fn preference_pair_labeling_errors() {
        let page = blitzer_page();
        let dicts = build_dictionaries([&page.page], &DictionaryConfig::uniform(1)).unwrap();
        let mut insts = page.vectorize(&dicts).unwrap();
        let single = vec![insts[1].clone()];
        assert!(build_preference_pairs(&single).unwrap().is_empty());
        insts[1].label = Some(Label::Other);
        assert!(matches!(build_preference_pairs(&insts), Err(Error::InvalidLabeling(_))));
        insts[0].label = Some(Label::Homepage);
        insts[2].label = Some(Label::Homepage);
        assert!(matches!(build_preference_pairs(&insts), Err(Error::InvalidLabeling(_))));
    }

    #[test]
    fn labeled_file_errors_name_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hp.jsonl");
        let good = r#"{"name":"A B","results":[{"rank":1,"url":"a.org","title":"t","snippet":"s","homepage":true}]}"#;
        let bad = r#"{"name":"C D","results":[{"rank":1,"url":"c.org","title":"t","snippet":"s","homepage":false}]}"#;
        std::fs::write(&path, format!("{good}\n{bad}\n")).unwrap();
        match load_labeled_pages(&path) {
            Err(Error::InvalidLabeling(m)) => assert!(m.contains(":2:"), "{m}"),
            other => panic!("unexpected {other:?}"),
        }
        std::fs::write(&path, format!("{good}\nnot json\n")).unwrap();
        assert!(matches!(load_labeled_pages(&path), Err(Error::Parse { line: 2, .. })));
        std::fs::write(&path, format!("{good}\n")).unwrap();
        assert_eq!(load_labeled_pages(&path).unwrap().len(), 1);
    }
}
