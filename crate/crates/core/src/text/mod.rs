//! Tokenization, normalization, stopword removal and stemming.
//!
//! The same analyzer feeds the lexical index, the projection embedder and the
//! TF-IDF topic path, so every consumer sees identical terms.

mod porter;
pub mod stopwords;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use porter::porter_stem;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("invalid analyzer config: {0}")]
    InvalidConfig(&'static str),
    #[error("invalid vocabulary parameters: {0}")]
    InvalidVocabularyParams(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzerConfig {
    pub lowercase: bool,
    pub stopwords: BTreeSet<String>,
    pub stem: bool,
    pub min_token_len: usize,
    pub max_token_len: usize,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        AnalyzerConfig {
            lowercase: true,
            stopwords: stopwords::ENGLISH.iter().map(|s| s.to_string()).collect(),
            stem: true,
            min_token_len: 2,
            max_token_len: 40,
        }
    }
}

impl AnalyzerConfig {
    /// Analyzer used to compare author names: lowercase, no stopwords, no
    /// stemming, every token kept.
    pub fn names() -> Self {
        AnalyzerConfig {
            lowercase: true,
            stopwords: BTreeSet::new(),
            stem: false,
            min_token_len: 1,
            max_token_len: usize::MAX,
        }
    }

    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.stopwords = words.into_iter().map(Into::into).collect();
        self
    }

    pub fn validate(&self) -> Result<(), TextError> {
        if self.min_token_len < 1 {
            return Err(TextError::InvalidConfig("min_token_len must be >= 1"));
        }
        if self.max_token_len < self.min_token_len {
            return Err(TextError::InvalidConfig("max_token_len must be >= min_token_len"));
        }
        Ok(())
    }

    /// Stable textual fingerprint, recorded in index manifests.
    pub fn fingerprint(&self) -> String {
        let mut s = alloc::format!(
            "lower={};stem={};min={};max={};stop=",
            self.lowercase,
            self.stem,
            self.min_token_len,
            self.max_token_len
        );
        for (i, w) in self.stopwords.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(w);
        }
        s
    }

    fn keep(&self, token: &str) -> bool {
        let len = token.chars().count();
        len >= self.min_token_len && len <= self.max_token_len && !self.stopwords.contains(token)
    }
}

/// Stems to a fixed point; a single Porter pass is not idempotent.
fn stem_fixed_point(token: &str) -> String {
    let mut current = porter_stem(token);
    loop {
        let next = porter_stem(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

/// Splits on every non-alphanumeric character, then lowercases, filters and
/// stems. Filters run again after stemming so the output is stable under
/// re-analysis.
pub fn analyze(text: &str, config: &AnalyzerConfig) -> Vec<String> {
    let mut out = Vec::new();
    for raw in text.split(|c: char| !c.is_alphanumeric()) {
        if raw.is_empty() {
            continue;
        }
        let token = if config.lowercase { raw.to_lowercase() } else { raw.to_string() };
        if !config.keep(&token) {
            continue;
        }
        if config.stem {
            let stemmed = stem_fixed_point(&token);
            if config.keep(&stemmed) {
                out.push(stemmed);
            }
        } else {
            out.push(token);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermEntry {
    pub index: usize,
    pub df: usize,
}

/// Term dictionary with document frequencies; indices follow lexicographic
/// term order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: BTreeMap<String, TermEntry>,
    by_index: Vec<String>,
    total_docs: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.by_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_index.is_empty()
    }

    pub fn total_docs(&self) -> usize {
        self.total_docs
    }

    pub fn get(&self, term: &str) -> Option<TermEntry> {
        self.terms.get(term).copied()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.terms.get(term).map(|e| e.index)
    }

    pub fn term(&self, index: usize) -> &str {
        &self.by_index[index]
    }

    pub fn df(&self, index: usize) -> usize {
        self.terms[&self.by_index[index]].df
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, TermEntry)> {
        self.terms.iter().map(|(t, e)| (t.as_str(), *e))
    }
}

/// Counts document frequencies over `docs` and keeps terms with
/// `df >= min_df` and `df / N <= max_df_ratio`.
pub fn build_vocabulary<D, T>(docs: &[D], min_df: usize, max_df_ratio: f64) -> Result<Vocabulary, TextError>
where
    D: AsRef<[T]>,
    T: AsRef<str>,
{
    if min_df < 1 {
        return Err(TextError::InvalidVocabularyParams("min_df must be >= 1"));
    }
    if !(max_df_ratio > 0.0 && max_df_ratio <= 1.0) {
        return Err(TextError::InvalidVocabularyParams("max_df_ratio must be in (0, 1]"));
    }
    let n = docs.len();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let unique: BTreeSet<&str> = doc.as_ref().iter().map(AsRef::as_ref).collect();
        for t in unique {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let mut terms = BTreeMap::new();
    let mut by_index = Vec::new();
    for (t, count) in df {
        if count < min_df || count as f64 / n as f64 > max_df_ratio {
            continue;
        }
        terms.insert(t.to_string(), TermEntry { index: by_index.len(), df: count });
        by_index.push(t.to_string());
    }
    Ok(Vocabulary { terms, by_index, total_docs: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn analyze_examples() {
        let cfg = AnalyzerConfig::default();
        assert!(analyze("", &cfg).is_empty());
        assert!(analyze("The THE the", &cfg).is_empty());
        assert_eq!(analyze("Neural-Networks, running!", &cfg), toks(&["neural", "network", "run"]));
        assert_eq!(analyze("BERT2BERT models", &cfg), toks(&["bert2bert", "model"]));
    }

    #[test]
    fn length_bounds() {
        let cfg = AnalyzerConfig { min_token_len: 3, max_token_len: 5, ..AnalyzerConfig::names() };
        assert_eq!(analyze("ab abc abcdef", &cfg), toks(&["abc"]));
        let bad = AnalyzerConfig { min_token_len: 0, ..AnalyzerConfig::default() };
        assert!(bad.validate().is_err());
        let bad = AnalyzerConfig { min_token_len: 4, max_token_len: 3, ..AnalyzerConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn stemmed_stopword_dropped() {
        // "ones" stems to "on", a stopword.
        assert!(analyze("ones", &AnalyzerConfig::default()).is_empty());
    }

    #[test]
    fn vocabulary_examples() {
        let docs = vec![toks(&["a", "b"]), toks(&["b"])];
        let v = build_vocabulary(&docs, 1, 1.0).unwrap();
        assert_eq!(v.get("a"), Some(TermEntry { index: 0, df: 1 }));
        assert_eq!(v.get("b"), Some(TermEntry { index: 1, df: 2 }));
        let v = build_vocabulary(&docs, 2, 1.0).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.get("b"), Some(TermEntry { index: 0, df: 2 }));
        let v = build_vocabulary(&docs, 1, 0.5).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.term(0), "a");
        let empty: Vec<Vec<String>> = Vec::new();
        assert!(build_vocabulary(&empty, 1, 1.0).unwrap().is_empty());
        assert!(build_vocabulary(&docs, 0, 1.0).is_err());
        assert!(build_vocabulary(&docs, 1, 0.0).is_err());
    }
}
