//! Validated, immutable scholarly corpus: papers, authors, authorship,
//! citations and embeddings.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math;

/// Papers whose year cannot be established under the lenient policy get this.
pub const UNKNOWN_YEAR: i32 = 0;
pub const MIN_YEAR: i32 = 1900;
pub const MAX_YEAR: i32 = 2100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("citation {citing} -> {cited} references a paper that is not in the corpus")]
    DanglingCitation { citing: String, cited: String },
    #[error("authorship ({author}, {paper}) references an unknown author or paper")]
    DanglingAuthorship { author: String, paper: String },
    #[error("paper `{0}` has no usable publication year")]
    MissingYear(String),
    #[error("author `{author}` has invalid country code `{code}`")]
    InvalidCountryCode { author: String, code: String },
    #[error("embedding for `{paper}` has dimension {got}, expected {expected}")]
    DimensionMismatch { paper: String, expected: usize, got: usize },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidationPolicy {
    /// Any integrity violation aborts the load.
    Strict,
    /// Violating records are dropped and counted.
    #[default]
    Drop,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub paper_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arxiv_id: Option<String>,
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    pub publication_year: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submitted_date: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doi: Option<String>,
    #[serde(default)]
    pub subject: String,
}

/// A paper line as it appears in an ingest dump, before year resolution.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PaperInput {
    pub paper_id: String,
    #[serde(default)]
    pub arxiv_id: Option<String>,
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    #[serde(default)]
    pub publication_year: Option<i64>,
    #[serde(default)]
    pub publication_date: Option<String>,
    #[serde(default)]
    pub submitted_date: Option<String>,
    #[serde(default)]
    pub doi: Option<String>,
    #[serde(default)]
    pub subject: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorRecord {
    pub author_id: String,
    pub name: String,
    #[serde(default)]
    pub institution_ids: Vec<String>,
    #[serde(default)]
    pub country_codes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AuthorshipRecord {
    pub author_id: String,
    pub paper_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CitationRecord {
    pub citing_paper_id: String,
    pub cited_paper_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub paper_id: String,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusStats {
    pub paper_count: usize,
    pub author_count: usize,
    pub institution_count: usize,
    pub country_count: usize,
    pub citation_count: usize,
    #[serde(serialize_with = "serialize_two_decimals")]
    pub avg_citations_per_paper: f64,
}

fn serialize_two_decimals<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(math::round_to(*v, 2))
}

/// Counters describing what validation did to the raw input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IngestReport {
    pub malformed: usize,
    pub duplicate_papers: usize,
    pub duplicate_authors: usize,
    pub duplicate_embeddings: usize,
    pub dangling: usize,
    pub self_citations: usize,
    pub duplicate_citations: usize,
    pub dangling_authorship: usize,
    pub unknown_years: usize,
    pub invalid_country_codes: usize,
    pub orphan_embeddings: usize,
    pub nonfinite_embeddings: usize,
    pub missing_embeddings: usize,
}

/// Raw records for one ingest, in file order.
#[derive(Debug, Clone, Default)]
pub struct CorpusInput {
    pub papers: Vec<PaperInput>,
    pub authors: Vec<AuthorRecord>,
    pub authorship: Vec<AuthorshipRecord>,
    pub citations: Vec<CitationRecord>,
    pub embeddings: Vec<EmbeddingRecord>,
    /// Identity of the encoder that produced `embeddings`, if declared.
    pub embedding_model: Option<String>,
}

/// Immutable validated corpus. Papers are keyed and ordered by id; a paper's
/// position in that order is its doc ordinal in every index.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSnapshot {
    papers: BTreeMap<String, PaperRecord>,
    authors: BTreeMap<String, AuthorRecord>,
    authorship: Vec<AuthorshipRecord>,
    citations: Vec<CitationRecord>,
    embeddings: BTreeMap<String, EmbeddingRecord>,
    embedding_dim: Option<usize>,
    embedding_model: Option<String>,
    ordinals: Vec<String>,
    paper_authors: BTreeMap<String, Vec<String>>,
    paper_institutions: BTreeMap<String, BTreeSet<String>>,
    paper_countries: BTreeMap<String, BTreeSet<String>>,
    stats: CorpusStats,
    fingerprint: String,
}

fn year_from_date(date: &str) -> Option<i64> {
    let head = date.get(..4)?;
    if head.bytes().all(|b| b.is_ascii_digit()) {
        head.parse().ok()
    } else {
        None
    }
}

fn valid_year(y: i64) -> Option<i32> {
    (i64::from(MIN_YEAR)..=i64::from(MAX_YEAR)).contains(&y).then_some(y as i32)
}

/// Publication date year, then the explicit year, then the submission year.
fn resolve_year(p: &PaperInput) -> Option<i32> {
    p.publication_date
        .as_deref()
        .and_then(year_from_date)
        .and_then(valid_year)
        .or_else(|| p.publication_year.and_then(valid_year))
        .or_else(|| p.submitted_date.as_deref().and_then(year_from_date).and_then(valid_year))
}

fn is_country_code(code: &str) -> bool {
    code.len() == 2 && code.bytes().all(|b| b.is_ascii_uppercase())
}

impl CorpusSnapshot {
    /// Validates raw input under `policy` and freezes it.
    pub fn assemble(input: CorpusInput, policy: ValidationPolicy) -> Result<(Self, IngestReport), CorpusError> {
        let strict = policy == ValidationPolicy::Strict;
        let mut report = IngestReport::default();

        let mut papers = BTreeMap::new();
        for p in input.papers {
            if p.paper_id.trim().is_empty() || p.title.trim().is_empty() {
                if strict {
                    return Err(CorpusError::InvalidRecord(format!("paper `{}` has an empty id or title", p.paper_id)));
                }
                report.malformed += 1;
                continue;
            }
            if papers.contains_key(&p.paper_id) {
                if strict {
                    return Err(CorpusError::DuplicateId { kind: "paper", id: p.paper_id });
                }
                report.duplicate_papers += 1;
                continue;
            }
            let year = match resolve_year(&p) {
                Some(y) => y,
                None if strict => return Err(CorpusError::MissingYear(p.paper_id)),
                None => {
                    report.unknown_years += 1;
                    UNKNOWN_YEAR
                }
            };
            let record = PaperRecord {
                paper_id: p.paper_id.clone(),
                arxiv_id: p.arxiv_id,
                title: p.title,
                abstract_text: p.abstract_text,
                publication_year: year,
                submitted_date: p.submitted_date,
                doi: p.doi,
                subject: p.subject,
            };
            papers.insert(p.paper_id, record);
        }

        let mut authors = BTreeMap::new();
        for mut a in input.authors {
            if a.author_id.trim().is_empty() {
                if strict {
                    return Err(CorpusError::InvalidRecord("author with empty id".to_string()));
                }
                report.malformed += 1;
                continue;
            }
            if authors.contains_key(&a.author_id) {
                if strict {
                    return Err(CorpusError::DuplicateId { kind: "author", id: a.author_id });
                }
                report.duplicate_authors += 1;
                continue;
            }
            let mut codes = Vec::with_capacity(a.country_codes.len());
            for code in a.country_codes.drain(..) {
                let upper = code.trim().to_ascii_uppercase();
                if is_country_code(&upper) {
                    if !codes.contains(&upper) {
                        codes.push(upper);
                    }
                } else if strict {
                    return Err(CorpusError::InvalidCountryCode { author: a.author_id, code });
                } else {
                    report.invalid_country_codes += 1;
                }
            }
            a.country_codes = codes;
            let mut seen = BTreeSet::new();
            a.institution_ids.retain(|i| !i.is_empty() && seen.insert(i.clone()));
            authors.insert(a.author_id.clone(), a);
        }

        let mut authorship_set = BTreeSet::new();
        let mut authorship = Vec::new();
        for link in input.authorship {
            if !authors.contains_key(&link.author_id) || !papers.contains_key(&link.paper_id) {
                if strict {
                    return Err(CorpusError::DanglingAuthorship { author: link.author_id, paper: link.paper_id });
                }
                report.dangling_authorship += 1;
                continue;
            }
            if authorship_set.insert(link.clone()) {
                authorship.push(link);
            }
        }

        let mut citation_set = BTreeSet::new();
        let mut citations = Vec::new();
        for c in input.citations {
            if c.citing_paper_id == c.cited_paper_id {
                report.self_citations += 1;
                continue;
            }
            if !papers.contains_key(&c.citing_paper_id) || !papers.contains_key(&c.cited_paper_id) {
                if strict {
                    return Err(CorpusError::DanglingCitation { citing: c.citing_paper_id, cited: c.cited_paper_id });
                }
                report.dangling += 1;
                continue;
            }
            if citation_set.insert(c.clone()) {
                citations.push(c);
            } else {
                report.duplicate_citations += 1;
            }
        }

        let mut embeddings = BTreeMap::new();
        let mut embedding_dim = None;
        for e in input.embeddings {
            if !papers.contains_key(&e.paper_id) {
                report.orphan_embeddings += 1;
                continue;
            }
            if e.vector.iter().any(|x| !x.is_finite()) || e.vector.is_empty() {
                if strict {
                    return Err(CorpusError::InvalidRecord(format!(
                        "embedding for `{}` has non-finite or no components",
                        e.paper_id
                    )));
                }
                report.nonfinite_embeddings += 1;
                continue;
            }
            match embedding_dim {
                None => embedding_dim = Some(e.vector.len()),
                Some(d) if d != e.vector.len() => {
                    return Err(CorpusError::DimensionMismatch { paper: e.paper_id, expected: d, got: e.vector.len() })
                }
                Some(_) => {}
            }
            if embeddings.contains_key(&e.paper_id) {
                if strict {
                    return Err(CorpusError::DuplicateId { kind: "embedding", id: e.paper_id });
                }
                report.duplicate_embeddings += 1;
                continue;
            }
            embeddings.insert(e.paper_id.clone(), e);
        }
        report.missing_embeddings = papers.len() - embeddings.len();

        let snapshot =
            Self::freeze(papers, authors, authorship, citations, embeddings, embedding_dim, input.embedding_model);
        Ok((snapshot, report))
    }

    fn freeze(
        papers: BTreeMap<String, PaperRecord>,
        authors: BTreeMap<String, AuthorRecord>,
        authorship: Vec<AuthorshipRecord>,
        citations: Vec<CitationRecord>,
        embeddings: BTreeMap<String, EmbeddingRecord>,
        embedding_dim: Option<usize>,
        embedding_model: Option<String>,
    ) -> Self {
        let ordinals: Vec<String> = papers.keys().cloned().collect();
        let mut paper_authors: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut paper_institutions: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut paper_countries: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for link in &authorship {
            let author = &authors[&link.author_id];
            let list = paper_authors.entry(link.paper_id.clone()).or_default();
            if !list.contains(&link.author_id) {
                list.push(link.author_id.clone());
            }
            paper_institutions.entry(link.paper_id.clone()).or_default().extend(author.institution_ids.iter().cloned());
            paper_countries.entry(link.paper_id.clone()).or_default().extend(author.country_codes.iter().cloned());
        }
        let mut snapshot = CorpusSnapshot {
            papers,
            authors,
            authorship,
            citations,
            embeddings,
            embedding_dim,
            embedding_model,
            ordinals,
            paper_authors,
            paper_institutions,
            paper_countries,
            stats: CorpusStats::default(),
            fingerprint: String::new(),
        };
        snapshot.stats = compute_stats(&snapshot);
        snapshot.fingerprint = snapshot.compute_fingerprint();
        snapshot
    }

    pub fn empty() -> Self {
        Self::freeze(BTreeMap::new(), BTreeMap::new(), Vec::new(), Vec::new(), BTreeMap::new(), None, None)
    }

    fn compute_fingerprint(&self) -> String {
        let mut h: u64 = 0x1234_5678_9abc_def0;
        let mut feed = |bytes: &[u8]| {
            h = math::hash_bytes(bytes, h);
        };
        for p in self.papers.values() {
            feed(p.paper_id.as_bytes());
            feed(p.arxiv_id.as_deref().unwrap_or("\u{0}").as_bytes());
            feed(p.title.as_bytes());
            feed(p.abstract_text.as_bytes());
            feed(&p.publication_year.to_le_bytes());
            feed(p.submitted_date.as_deref().unwrap_or("\u{0}").as_bytes());
            feed(p.doi.as_deref().unwrap_or("\u{0}").as_bytes());
            feed(p.subject.as_bytes());
        }
        for a in self.authors.values() {
            feed(a.author_id.as_bytes());
            feed(a.name.as_bytes());
            for i in &a.institution_ids {
                feed(i.as_bytes());
            }
            feed(b"|");
            for c in &a.country_codes {
                feed(c.as_bytes());
            }
        }
        for l in &self.authorship {
            feed(l.author_id.as_bytes());
            feed(l.paper_id.as_bytes());
        }
        for c in &self.citations {
            feed(c.citing_paper_id.as_bytes());
            feed(c.cited_paper_id.as_bytes());
        }
        for e in self.embeddings.values() {
            feed(e.paper_id.as_bytes());
            for x in &e.vector {
                feed(&x.to_bits().to_le_bytes());
            }
        }
        feed(self.embedding_model.as_deref().unwrap_or("\u{0}").as_bytes());
        format!("{h:016x}")
    }

    /// Stable content fingerprint; indexes record it to detect staleness.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }

    /// Looks up a paper. Ids are case-sensitive.
    pub fn get_paper(&self, paper_id: &str) -> Option<&PaperRecord> {
        self.papers.get(paper_id)
    }

    pub fn papers(&self) -> impl ExactSizeIterator<Item = &PaperRecord> {
        self.papers.values()
    }

    pub fn paper_count(&self) -> usize {
        self.papers.len()
    }

    pub fn get_author(&self, author_id: &str) -> Option<&AuthorRecord> {
        self.authors.get(author_id)
    }

    pub fn authors(&self) -> impl ExactSizeIterator<Item = &AuthorRecord> {
        self.authors.values()
    }

    pub fn authorship(&self) -> &[AuthorshipRecord] {
        &self.authorship
    }

    pub fn citations(&self) -> &[CitationRecord] {
        &self.citations
    }

    pub fn embeddings(&self) -> impl ExactSizeIterator<Item = &EmbeddingRecord> {
        self.embeddings.values()
    }

    pub fn embedding(&self, paper_id: &str) -> Option<&[f64]> {
        self.embeddings.get(paper_id).map(|e| e.vector.as_slice())
    }

    pub fn embedding_dim(&self) -> Option<usize> {
        self.embedding_dim
    }

    pub fn embedding_model(&self) -> Option<&str> {
        self.embedding_model.as_deref()
    }

    /// Paper ids in ordinal order.
    pub fn ordinals(&self) -> &[String] {
        &self.ordinals
    }

    pub fn ordinal_of(&self, paper_id: &str) -> Option<usize> {
        self.ordinals.binary_search_by(|p| p.as_str().cmp(paper_id)).ok()
    }

    pub fn paper_at(&self, ordinal: usize) -> &PaperRecord {
        &self.papers[&self.ordinals[ordinal]]
    }

    /// Author ids of a paper in authorship order.
    pub fn paper_authors(&self, paper_id: &str) -> &[String] {
        self.paper_authors.get(paper_id).map_or(&[], Vec::as_slice)
    }

    /// Union of the paper's authors' institutions.
    pub fn paper_institutions(&self, paper_id: &str) -> impl Iterator<Item = &str> {
        self.paper_institutions.get(paper_id).into_iter().flatten().map(String::as_str)
    }

    /// Union of the paper's authors' countries.
    pub fn paper_countries(&self, paper_id: &str) -> impl Iterator<Item = &str> {
        self.paper_countries.get(paper_id).into_iter().flatten().map(String::as_str)
    }
}

/// Exact counts over a snapshot; the average is 0 for an empty corpus.
pub fn compute_stats(snapshot: &CorpusSnapshot) -> CorpusStats {
    let mut institutions = BTreeSet::new();
    let mut countries = BTreeSet::new();
    for a in snapshot.authors.values() {
        institutions.extend(a.institution_ids.iter().map(String::as_str));
        countries.extend(a.country_codes.iter().map(String::as_str));
    }
    let paper_count = snapshot.papers.len();
    let citation_count = snapshot.citations.len();
    CorpusStats {
        paper_count,
        author_count: snapshot.authors.len(),
        institution_count: institutions.len(),
        country_count: countries.len(),
        citation_count,
        avg_citations_per_paper: if paper_count > 0 { citation_count as f64 / paper_count as f64 } else { 0.0 },
    }
}
