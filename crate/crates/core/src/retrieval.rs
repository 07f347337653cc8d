//! Query preprocessing, structured filters, the two retrieval paths and
//! reciprocal rank fusion.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusSnapshot;
use crate::lexical::{IndexError, InvertedIndex, SearchOptions};
use crate::text::{analyze, AnalyzerConfig};
use crate::vector::{EmbedError, Embedder, VectorError, VectorIndex};

pub const DEFAULT_LIMIT: usize = 5000;
pub const DEFAULT_RRF_K: usize = 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RetrievalError {
    #[error("index was built from snapshot {index}, but the loaded snapshot is {snapshot}")]
    Consistency { index: String, snapshot: String },
    #[error("invalid request: {0}")]
    InvalidRequest(&'static str),
    #[error(transparent)]
    Lexical(#[from] IndexError),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Embedder(EmbedError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankingSource {
    Lexical,
    Semantic,
    Fused,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub paper_id: String,
    pub score: f64,
    pub rank: usize,
}

/// Ordered `(paper_id, score, rank)` triples from one retrieval path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub entries: Vec<RankedEntry>,
    pub source: RankingSource,
}

impl RankedList {
    pub fn empty(source: RankingSource) -> Self {
        RankedList { entries: Vec::new(), source }
    }

    /// Assigns ranks `1..` in iteration order; callers pass sorted input.
    pub fn from_scored(items: impl IntoIterator<Item = (String, f64)>, source: RankingSource) -> Self {
        let entries = items
            .into_iter()
            .enumerate()
            .map(|(i, (paper_id, score))| RankedEntry { paper_id, score, rank: i + 1 })
            .collect();
        RankedList { entries, source }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn paper_ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.paper_id.as_str()).collect()
    }

    pub fn truncate(&mut self, n: usize) {
        self.entries.truncate(n);
    }

    /// Ranks are 1..len in order and scores never increase.
    pub fn is_well_formed(&self) -> bool {
        self.entries.iter().enumerate().all(|(i, e)| e.rank == i + 1)
            && self.entries.windows(2).all(|w| w[0].score >= w[1].score)
    }
}

/// Set of doc ordinals a search may return.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum FilterSet {
    #[default]
    All,
    Subset(BTreeSet<usize>),
}

impl FilterSet {
    pub fn from_ordinals(ordinals: impl IntoIterator<Item = usize>) -> Self {
        FilterSet::Subset(ordinals.into_iter().collect())
    }

    pub fn contains(&self, ordinal: usize) -> bool {
        match self {
            FilterSet::All => true,
            FilterSet::Subset(s) => s.contains(&ordinal),
        }
    }

    pub fn is_all(&self) -> bool {
        matches!(self, FilterSet::All)
    }
}

/// Structured constraints. Empty sets are treated as absent.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FilterSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year_range: Option<(i32, i32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub authors: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub institutions: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub countries: Option<BTreeSet<String>>,
}

fn active(set: &Option<BTreeSet<String>>) -> Option<&BTreeSet<String>> {
    set.as_ref().filter(|s| !s.is_empty())
}

impl FilterSpec {
    pub fn validate(&self) -> Result<(), RetrievalError> {
        match self.year_range {
            Some((lo, hi)) if lo > hi => Err(RetrievalError::InvalidRequest("year_range min exceeds max")),
            _ => Ok(()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.year_range.is_none()
            && active(&self.authors).is_none()
            && active(&self.institutions).is_none()
            && active(&self.countries).is_none()
    }

    /// Whether one paper satisfies every active constraint.
    pub fn matches(&self, snapshot: &CorpusSnapshot, paper_id: &str) -> bool {
        let Some(paper) = snapshot.get_paper(paper_id) else { return false };
        if let Some((lo, hi)) = self.year_range {
            if paper.publication_year < lo || paper.publication_year > hi {
                return false;
            }
        }
        if let Some(wanted) = active(&self.authors) {
            let names = AnalyzerConfig::names();
            let wanted: Vec<Vec<String>> = wanted.iter().map(|n| analyze(n, &names)).collect();
            let hit = snapshot.paper_authors(paper_id).iter().any(|aid| {
                snapshot.get_author(aid).is_some_and(|a| {
                    let tokens = analyze(&a.name, &names);
                    wanted.contains(&tokens)
                })
            });
            if !hit {
                return false;
            }
        }
        if let Some(wanted) = active(&self.institutions) {
            if !snapshot.paper_institutions(paper_id).any(|i| wanted.contains(i)) {
                return false;
            }
        }
        if let Some(wanted) = active(&self.countries) {
            if !snapshot.paper_countries(paper_id).any(|c| wanted.iter().any(|w| w.eq_ignore_ascii_case(c))) {
                return false;
            }
        }
        true
    }
}

/// Lowercases, turns punctuation into spaces and collapses whitespace.
pub fn preprocess_query(text: &str) -> String {
    let lowered = text.to_lowercase();
    let spaced: String = lowered.chars().map(|c| if c.is_alphanumeric() { c } else { ' ' }).collect();
    let mut out = String::with_capacity(spaced.len());
    for word in spaced.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Resolves filters to the doc ordinals they admit; [`FilterSet::All`] when
/// no filter is active.
pub fn resolve_filter_set(snapshot: &CorpusSnapshot, filters: &FilterSpec) -> FilterSet {
    if filters.is_empty() {
        return FilterSet::All;
    }
    FilterSet::Subset(
        snapshot
            .ordinals()
            .iter()
            .enumerate()
            .filter(|(_, id)| filters.matches(snapshot, id))
            .map(|(o, _)| o)
            .collect(),
    )
}

/// Reciprocal rank fusion: `Σ 1 / (k + rank)` over the lists containing a
/// document. Ties go to the better best rank, then the smaller paper id.
pub fn rrf_fuse(lists: &[RankedList], k: usize) -> RankedList {
    struct Acc {
        score: f64,
        best_rank: usize,
    }
    let k = k as f64;
    let mut acc: BTreeMap<&str, Acc> = BTreeMap::new();
    for list in lists {
        for e in &list.entries {
            let slot = acc.entry(e.paper_id.as_str()).or_insert(Acc { score: 0.0, best_rank: usize::MAX });
            slot.score += 1.0 / (k + e.rank as f64);
            slot.best_rank = slot.best_rank.min(e.rank);
        }
    }
    let mut fused: Vec<(&str, Acc)> = acc.into_iter().collect();
    fused.sort_by(|a, b| {
        b.1.score
            .partial_cmp(&a.1.score)
            .unwrap_or(Ordering::Equal)
            .then(a.1.best_rank.cmp(&b.1.best_rank))
            .then_with(|| a.0.cmp(b.0))
    });
    RankedList::from_scored(fused.into_iter().map(|(id, a)| (String::from(id), a.score)), RankingSource::Fused)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRequest {
    pub text: String,
    #[serde(default)]
    pub filters: FilterSpec,
    pub limit: usize,
    pub rrf_k: usize,
    /// Candidates per path before fusion; `None` means `2 * limit`.
    #[serde(default)]
    pub per_path_depth: Option<usize>,
}

impl QueryRequest {
    pub fn new(text: impl Into<String>) -> Self {
        QueryRequest {
            text: text.into(),
            filters: FilterSpec::default(),
            limit: DEFAULT_LIMIT,
            rrf_k: DEFAULT_RRF_K,
            per_path_depth: None,
        }
    }

    pub fn with_limit(mut self, limit: usize) -> Self {
        self.limit = limit;
        self
    }

    pub fn with_filters(mut self, filters: FilterSpec) -> Self {
        self.filters = filters;
        self
    }

    pub fn depth(&self) -> usize {
        self.per_path_depth.unwrap_or(self.limit.saturating_mul(2))
    }

    pub fn validate(&self) -> Result<(), RetrievalError> {
        if self.limit < 1 {
            return Err(RetrievalError::InvalidRequest("limit must be >= 1"));
        }
        if self.rrf_k < 1 {
            return Err(RetrievalError::InvalidRequest("rrf_k must be >= 1"));
        }
        if self.depth() < self.limit {
            return Err(RetrievalError::InvalidRequest("per_path_depth must be >= limit"));
        }
        self.filters.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalOutcome {
    pub normalized_query: String,
    pub fused: RankedList,
    pub lexical: RankedList,
    pub semantic: RankedList,
    pub semantic_degraded: bool,
}

/// Read-only view over one snapshot and the indexes built from it.
#[derive(Clone, Copy)]
pub struct Retriever<'a> {
    pub snapshot: &'a CorpusSnapshot,
    pub lexical: &'a InvertedIndex,
    pub vectors: &'a VectorIndex,
    pub analyzer: &'a AnalyzerConfig,
    pub options: SearchOptions,
}

/// Output of the semantic path: the ranking and whether the encoder failed.
pub type SemanticPath = (RankedList, bool);

impl<'a> Retriever<'a> {
    pub fn check_consistency(&self) -> Result<(), RetrievalError> {
        let fp = self.snapshot.fingerprint();
        for index_fp in [self.lexical.snapshot_fingerprint(), self.vectors.snapshot_fingerprint()] {
            if index_fp != fp {
                return Err(RetrievalError::Consistency { index: index_fp.into(), snapshot: fp.into() });
            }
        }
        Ok(())
    }

    pub fn lexical_path(
        &self,
        normalized_query: &str,
        depth: usize,
        filter: &FilterSet,
    ) -> Result<RankedList, RetrievalError> {
        let tokens = analyze(normalized_query, self.analyzer);
        Ok(self.lexical.search(&tokens, &self.options, depth, filter)?)
    }

    /// Unavailable encoders degrade to an empty ranking with the flag set;
    /// shape and model mismatches are errors.
    pub fn semantic_path(
        &self,
        embedder: Option<&dyn Embedder>,
        normalized_query: &str,
        depth: usize,
        filter: &FilterSet,
    ) -> Result<SemanticPath, RetrievalError> {
        let empty = RankedList::empty(RankingSource::Semantic);
        let Some(embedder) = embedder else { return Ok((empty, true)) };
        if self.vectors.is_empty() {
            return Ok((empty, false));
        }
        match embedder.embed(normalized_query) {
            Ok(q) => {
                if q.dim() != self.vectors.dimension() {
                    return Err(RetrievalError::Embedder(EmbedError::Shape {
                        expected: self.vectors.dimension(),
                        got: q.dim(),
                    }));
                }
                match self.vectors.knn_search(&q, depth, filter) {
                    Ok(list) => Ok((list, false)),
                    Err(VectorError::Degenerate) => Ok((empty, false)),
                    Err(e) => Err(e.into()),
                }
            }
            Err(EmbedError::Unavailable(_)) => Ok((empty, true)),
            Err(EmbedError::EmptyText) => Ok((empty, false)),
            Err(e) => Err(RetrievalError::Embedder(e)),
        }
    }

    /// Fuses both paths and truncates to the request limit.
    pub fn fuse(
        &self,
        request: &QueryRequest,
        normalized_query: String,
        lexical: RankedList,
        semantic: SemanticPath,
    ) -> RetrievalOutcome {
        let (semantic, semantic_degraded) = semantic;
        let mut fused = rrf_fuse(&[lexical.clone(), semantic.clone()], request.rrf_k);
        fused.truncate(request.limit);
        RetrievalOutcome { normalized_query, fused, lexical, semantic, semantic_degraded }
    }

    /// Runs both paths over the filtered set, then fuses.
    pub fn retrieve(
        &self,
        embedder: Option<&dyn Embedder>,
        request: &QueryRequest,
    ) -> Result<RetrievalOutcome, RetrievalError> {
        request.validate()?;
        self.check_consistency()?;
        let normalized = preprocess_query(&request.text);
        let filter = resolve_filter_set(self.snapshot, &request.filters);
        let depth = request.depth();
        let lexical = self.lexical_path(&normalized, depth, &filter)?;
        let semantic = self.semantic_path(embedder, &normalized, depth, &filter)?;
        Ok(self.fuse(request, normalized, lexical, semantic))
    }
}
