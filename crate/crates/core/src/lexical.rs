//! Field-aware BM25 over an in-memory inverted index.
//!
//! Title and abstract are indexed as separate fields and scored
//! independently; a document's score is the weighted sum of its per-field
//! BM25 scores, with a multiplicative bonus on the title part when the whole
//! query occurs as a contiguous phrase in the title.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusSnapshot;
use crate::math;
use crate::retrieval::{FilterSet, RankedList, RankingSource};
use crate::text::{analyze, AnalyzerConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndexError {
    #[error("average document length must be positive, got {0}")]
    InvalidAvgdl(f64),
    #[error("invalid BM25 parameters: k1={k1}, b={b}")]
    InvalidParams { k1: f64, b: f64 },
    #[error("invalid field weights")]
    InvalidWeights,
    #[error("corrupt index: {0}")]
    Corrupt(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<(), IndexError> {
        if self.k1 >= 0.0 && (0.0..=1.0).contains(&self.b) {
            Ok(())
        } else {
            Err(IndexError::InvalidParams { k1: self.k1, b: self.b })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldWeights {
    pub title_weight: f64,
    pub abstract_weight: f64,
    pub phrase_bonus_factor: f64,
}

impl Default for FieldWeights {
    fn default() -> Self {
        FieldWeights { title_weight: 2.0, abstract_weight: 1.0, phrase_bonus_factor: 1.5 }
    }
}

impl FieldWeights {
    pub fn validate(&self) -> Result<(), IndexError> {
        if self.title_weight > 0.0 && self.abstract_weight > 0.0 && self.phrase_bonus_factor > 0.0 {
            Ok(())
        } else {
            Err(IndexError::InvalidWeights)
        }
    }
}

/// Expansion of query terms that have no postings at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyConfig {
    pub enabled: bool,
    pub min_term_len: usize,
    pub max_expansions: usize,
    pub idf_discount: f64,
}

impl Default for FuzzyConfig {
    fn default() -> Self {
        FuzzyConfig { enabled: true, min_term_len: 5, max_expansions: 10, idf_discount: 0.5 }
    }
}

impl FuzzyConfig {
    pub fn disabled() -> Self {
        FuzzyConfig { enabled: false, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub params: Bm25Params,
    pub weights: FieldWeights,
    pub fuzzy: FuzzyConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Title,
    Abstract,
}

impl Field {
    pub const ALL: [Field; 2] = [Field::Title, Field::Abstract];
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldIndex {
    postings: BTreeMap<String, Vec<Posting>>,
    doc_lengths: Vec<u32>,
    avgdl: f64,
}

impl FieldIndex {
    fn build(docs: &[Vec<String>]) -> Self {
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_lengths = Vec::with_capacity(docs.len());
        for (doc, tokens) in docs.iter().enumerate() {
            doc_lengths.push(tokens.len() as u32);
            let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
            for t in tokens {
                *counts.entry(t.as_str()).or_insert(0) += 1;
            }
            for (t, tf) in counts {
                postings.entry(t.into()).or_default().push(Posting { doc: doc as u32, tf });
            }
        }
        Self::from_parts(postings, doc_lengths).expect("freshly built postings are sorted")
    }

    /// Rebuilds a field from persisted parts, checking ordering invariants.
    pub fn from_parts(postings: BTreeMap<String, Vec<Posting>>, doc_lengths: Vec<u32>) -> Result<Self, IndexError> {
        let n = doc_lengths.len();
        for list in postings.values() {
            if list.windows(2).any(|w| w[0].doc >= w[1].doc) {
                return Err(IndexError::Corrupt("postings not strictly ascending"));
            }
            if list.iter().any(|p| p.doc as usize >= n || p.tf == 0) {
                return Err(IndexError::Corrupt("posting out of range"));
            }
        }
        let avgdl = if n == 0 { 0.0 } else { doc_lengths.iter().map(|&l| f64::from(l)).sum::<f64>() / n as f64 };
        Ok(FieldIndex { postings, doc_lengths, avgdl })
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &[Posting])> {
        self.postings.iter().map(|(t, p)| (t.as_str(), p.as_slice()))
    }

    pub fn doc_lengths(&self) -> &[u32] {
        &self.doc_lengths
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn df(&self, term: &str) -> usize {
        self.postings(term).len()
    }
}

/// Smoothed IDF, `ln(1 + (N - df + 0.5) / (df + 0.5))`; never negative.
pub fn idf(doc_count: usize, df: usize) -> f64 {
    let n = doc_count as f64;
    let df = df as f64;
    math::ln(1.0 + (n - df + 0.5) / (df + 0.5))
}

/// One term's BM25 contribution for one document.
pub fn bm25_term_score(tf: u32, doc_len: u32, avgdl: f64, idf: f64, params: &Bm25Params) -> Result<f64, IndexError> {
    if avgdl.is_nan() || avgdl <= 0.0 {
        return Err(IndexError::InvalidAvgdl(avgdl));
    }
    if tf == 0 {
        return Ok(0.0);
    }
    let tf = f64::from(tf);
    let norm = params.k1 * (1.0 - params.b + params.b * f64::from(doc_len) / avgdl);
    Ok(idf * tf * (params.k1 + 1.0) / (tf + norm))
}

/// True when `a` and `b` are exactly one insertion, deletion, substitution or
/// adjacent transposition apart.
pub fn is_one_edit_apart(a: &str, b: &str) -> bool {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    match a.len() as isize - b.len() as isize {
        0 => {
            let diffs: Vec<usize> = (0..a.len()).filter(|&i| a[i] != b[i]).collect();
            match diffs.as_slice() {
                [_] => true,
                [i, j] => *j == i + 1 && a[*i] == b[*j] && a[*j] == b[*i],
                _ => false,
            }
        }
        1 | -1 => {
            let (long, short) = if a.len() > b.len() { (&a, &b) } else { (&b, &a) };
            let prefix = short.iter().zip(long.iter()).take_while(|(x, y)| x == y).count();
            short[prefix..] == long[prefix + 1..]
        }
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    title: FieldIndex,
    abstract_: FieldIndex,
    title_tokens: Vec<Vec<String>>,
    paper_ids: Vec<String>,
    snapshot_fingerprint: String,
    analyzer_fingerprint: String,
}

/// A query term resolved to the indexed terms it scores against.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedTerm {
    pub term: String,
    pub idf_factor: f64,
}

impl InvertedIndex {
    /// Indexes title and abstract of every paper in ordinal order.
    pub fn build(snapshot: &CorpusSnapshot, analyzer: &AnalyzerConfig) -> Self {
        let mut titles = Vec::with_capacity(snapshot.paper_count());
        let mut abstracts = Vec::with_capacity(snapshot.paper_count());
        for p in snapshot.papers() {
            titles.push(analyze(&p.title, analyzer));
            abstracts.push(analyze(&p.abstract_text, analyzer));
        }
        InvertedIndex {
            title: FieldIndex::build(&titles),
            abstract_: FieldIndex::build(&abstracts),
            title_tokens: titles,
            paper_ids: snapshot.ordinals().to_vec(),
            snapshot_fingerprint: snapshot.fingerprint().into(),
            analyzer_fingerprint: analyzer.fingerprint(),
        }
    }

    pub fn from_parts(
        title: FieldIndex,
        abstract_: FieldIndex,
        title_tokens: Vec<Vec<String>>,
        paper_ids: Vec<String>,
        snapshot_fingerprint: String,
        analyzer_fingerprint: String,
    ) -> Result<Self, IndexError> {
        let n = paper_ids.len();
        if title.doc_lengths.len() != n || abstract_.doc_lengths.len() != n || title_tokens.len() != n {
            return Err(IndexError::Corrupt("field lengths disagree with document count"));
        }
        if paper_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(IndexError::Corrupt("paper ids not in ordinal order"));
        }
        Ok(InvertedIndex { title, abstract_, title_tokens, paper_ids, snapshot_fingerprint, analyzer_fingerprint })
    }

    pub fn field(&self, field: Field) -> &FieldIndex {
        match field {
            Field::Title => &self.title,
            Field::Abstract => &self.abstract_,
        }
    }

    pub fn doc_count(&self) -> usize {
        self.paper_ids.len()
    }

    pub fn paper_ids(&self) -> &[String] {
        &self.paper_ids
    }

    pub fn title_tokens(&self) -> &[Vec<String>] {
        &self.title_tokens
    }

    pub fn snapshot_fingerprint(&self) -> &str {
        &self.snapshot_fingerprint
    }

    pub fn analyzer_fingerprint(&self) -> &str {
        &self.analyzer_fingerprint
    }

    pub fn idf(&self, field: Field, term: &str) -> f64 {
        idf(self.doc_count(), self.field(field).df(term))
    }

    fn contains_term(&self, term: &str) -> bool {
        Field::ALL.iter().any(|&f| self.field(f).df(term) > 0)
    }

    /// Indexed terms one edit away from `term`, lexicographic, capped.
    pub fn fuzzy_expansions(&self, term: &str, max: usize) -> Vec<String> {
        let mut found: Vec<&str> = self
            .title
            .postings
            .keys()
            .chain(self.abstract_.postings.keys())
            .map(String::as_str)
            .filter(|t| is_one_edit_apart(term, t))
            .collect();
        found.sort_unstable();
        found.dedup();
        found.into_iter().take(max).map(String::from).collect()
    }

    /// Maps each query token to the indexed terms it scores with, in query
    /// order. Present terms map to themselves; absent ones may expand.
    pub fn resolve_terms(&self, tokens: &[String], fuzzy: &FuzzyConfig) -> Vec<ResolvedTerm> {
        let mut out = Vec::new();
        for token in tokens {
            if self.contains_term(token) {
                out.push(ResolvedTerm { term: token.clone(), idf_factor: 1.0 });
            } else if fuzzy.enabled && token.chars().count() >= fuzzy.min_term_len {
                for term in self.fuzzy_expansions(token, fuzzy.max_expansions) {
                    out.push(ResolvedTerm { term, idf_factor: fuzzy.idf_discount });
                }
            }
        }
        out
    }

    /// Whether `tokens` (two or more) occur contiguously in the doc's title.
    pub fn title_has_phrase(&self, doc: usize, tokens: &[String]) -> bool {
        tokens.len() >= 2 && self.title_tokens[doc].windows(tokens.len()).any(|w| w == tokens)
    }

    /// Scores every document matching at least one resolved term and returns
    /// the top `top_k` by score, ties broken by paper id.
    pub fn search(
        &self,
        query_tokens: &[String],
        options: &SearchOptions,
        top_k: usize,
        filter: &FilterSet,
    ) -> Result<RankedList, IndexError> {
        options.params.validate()?;
        options.weights.validate()?;
        if query_tokens.is_empty() || top_k == 0 {
            return Ok(RankedList::empty(RankingSource::Lexical));
        }
        let n = self.doc_count();
        let resolved = self.resolve_terms(query_tokens, &options.fuzzy);
        let mut acc = [vec![0.0f64; n], vec![0.0f64; n]];
        let mut touched = vec![false; n];
        for rt in &resolved {
            for (fi, &field) in Field::ALL.iter().enumerate() {
                let index = self.field(field);
                let list = index.postings(&rt.term);
                if list.is_empty() {
                    continue;
                }
                let term_idf = idf(n, list.len()) * rt.idf_factor;
                for p in list {
                    let doc = p.doc as usize;
                    if !filter.contains(doc) {
                        continue;
                    }
                    let s = bm25_term_score(p.tf, index.doc_lengths[doc], index.avgdl, term_idf, &options.params)?;
                    acc[fi][doc] += s;
                    touched[doc] = true;
                }
            }
        }
        let mut scored: Vec<(usize, f64)> = Vec::new();
        for doc in (0..n).filter(|&d| touched[d]) {
            let bonus =
                if self.title_has_phrase(doc, query_tokens) { options.weights.phrase_bonus_factor } else { 1.0 };
            let title = acc[0][doc] * bonus;
            let score = options.weights.title_weight * title + options.weights.abstract_weight * acc[1][doc];
            scored.push((doc, score));
        }
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| self.paper_ids[a.0].cmp(&self.paper_ids[b.0]))
        });
        scored.truncate(top_k);
        Ok(RankedList::from_scored(
            scored.into_iter().map(|(d, s)| (self.paper_ids[d].clone(), s)),
            RankingSource::Lexical,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusInput, PaperInput, ValidationPolicy};
    use alloc::string::ToString;

    fn snapshot(docs: &[(&str, &str, &str)]) -> CorpusSnapshot {
        let papers = docs
            .iter()
            .map(|(id, title, abs)| PaperInput {
                paper_id: id.to_string(),
                arxiv_id: None,
                title: title.to_string(),
                abstract_text: abs.to_string(),
                publication_year: Some(2020),
                publication_date: None,
                submitted_date: None,
                doi: None,
                subject: String::new(),
            })
            .collect();
        CorpusSnapshot::assemble(CorpusInput { papers, ..Default::default() }, ValidationPolicy::Strict).unwrap().0
    }

    fn toks(s: &str) -> Vec<String> {
        analyze(s, &AnalyzerConfig::default())
    }

    #[test]
    fn postings_and_avgdl() {
        let idx = InvertedIndex::build(&snapshot(&[("d0", "graph graph", "")]), &AnalyzerConfig::default());
        assert_eq!(idx.field(Field::Title).postings("graph"), &[Posting { doc: 0, tf: 2 }]);
        let idx = InvertedIndex::build(
            &snapshot(&[("d0", "graph neural model", ""), ("d1", "graph", "")]),
            &AnalyzerConfig::default(),
        );
        assert_eq!(idx.field(Field::Title).avgdl(), 2.0);
    }

    #[test]
    fn term_score_cases() {
        let p = Bm25Params::default();
        assert_eq!(bm25_term_score(0, 3, 2.0, 1.0, &p).unwrap(), 0.0);
        let sat = bm25_term_score(1_000_000, 5, 2.0, 0.7, &Bm25Params { k1: 1.2, b: 0.0 }).unwrap();
        assert!((sat - 0.7 * 2.2).abs() < 1e-3);
        // Corpus {"neural machine translation", "machine learning", "quantum optics"}, query "machine".
        let idf_machine = idf(3, 2);
        assert!((idf_machine - 0.4700).abs() < 1e-4);
        let s = bm25_term_score(1, 3, 7.0 / 3.0, 0.4700, &p).unwrap();
        assert!((s - 0.4208).abs() < 1e-3, "{s}");
        assert!(bm25_term_score(1, 3, 0.0, 1.0, &p).is_err());
    }

    #[test]
    fn idf_non_negative() {
        for n in 0..50 {
            for df in 0..=n {
                assert!(idf(n, df) >= 0.0);
            }
        }
    }

    #[test]
    fn edit_distance_one() {
        assert!(is_one_edit_apart("graph", "grahp"));
        assert!(is_one_edit_apart("graph", "graphs"));
        assert!(is_one_edit_apart("graphs", "graph"));
        assert!(is_one_edit_apart("graph", "grape"));
        assert!(!is_one_edit_apart("graph", "graph"));
        assert!(!is_one_edit_apart("graph", "gpaphs"));
        assert!(!is_one_edit_apart("abcd", "badc"));
    }

    #[test]
    fn absent_term_without_fuzzy_is_empty() {
        let idx = InvertedIndex::build(&snapshot(&[("d0", "graph neural", "")]), &AnalyzerConfig::default());
        let opts = SearchOptions { fuzzy: FuzzyConfig::disabled(), ..Default::default() };
        let r = idx.search(&toks("quantum"), &opts, 10, &FilterSet::All).unwrap();
        assert!(r.is_empty());
        assert!(idx.search(&[], &opts, 10, &FilterSet::All).unwrap().is_empty());
    }

    #[test]
    fn fuzzy_expands_misspelling() {
        let idx = InvertedIndex::build(
            &snapshot(&[("d0", "quantum optics", ""), ("d1", "classical optics", "")]),
            &AnalyzerConfig::default(),
        );
        let opts = SearchOptions::default();
        let r = idx.search(&["quantom".to_string()], &opts, 10, &FilterSet::All).unwrap();
        assert_eq!(r.paper_ids(), vec!["d0"]);
        let exact = idx.search(&["quantum".to_string()], &opts, 10, &FilterSet::All).unwrap();
        assert!((r.entries[0].score * 2.0 - exact.entries[0].score).abs() < 1e-12);
        // Too short to expand.
        assert!(idx.search(&["optix".to_string()], &opts, 10, &FilterSet::All).unwrap().len() == 2);
        assert!(idx.search(&["opti".to_string()], &opts, 10, &FilterSet::All).unwrap().is_empty());
    }

    #[test]
    fn phrase_doc_ranks_first() {
        let idx = InvertedIndex::build(
            &snapshot(&[("a", "translation machine learning", ""), ("b", "machine translation systems", "")]),
            &AnalyzerConfig::default(),
        );
        let q = toks("machine translation");
        let r = idx.search(&q, &SearchOptions::default(), 10, &FilterSet::All).unwrap();
        assert_eq!(r.paper_ids(), vec!["b", "a"]);
        assert!(r.entries[0].score > r.entries[1].score);
    }

    #[test]
    fn filter_promotes_next_hit() {
        let idx = InvertedIndex::build(
            &snapshot(&[("a", "graph graph graph", ""), ("b", "graph networks", ""), ("c", "optics", "")]),
            &AnalyzerConfig::default(),
        );
        let q = toks("graph");
        let all = idx.search(&q, &SearchOptions::default(), 10, &FilterSet::All).unwrap();
        assert_eq!(all.paper_ids()[0], "a");
        let filtered = idx.search(&q, &SearchOptions::default(), 10, &FilterSet::from_ordinals([1, 2])).unwrap();
        assert_eq!(filtered.paper_ids(), vec!["b"]);
        assert_eq!(filtered.entries[0].rank, 1);
    }

    #[test]
    fn top_k_and_ties() {
        let idx = InvertedIndex::build(
            &snapshot(&[("b", "graph", ""), ("a", "graph", ""), ("c", "graph", "")]),
            &AnalyzerConfig::default(),
        );
        let r = idx.search(&toks("graph"), &SearchOptions::default(), 2, &FilterSet::All).unwrap();
        assert_eq!(r.paper_ids(), vec!["a", "b"]);
    }
}
