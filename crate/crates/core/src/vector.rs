//! Dense vectors, exact cosine KNN and query embedders.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusSnapshot;
use crate::math;
use crate::retrieval::{FilterSet, RankedList, RankingSource};
use crate::text::{analyze, AnalyzerConfig};

pub const DEFAULT_DIMENSION: usize = 384;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VectorError {
    #[error("vector has zero norm")]
    Degenerate,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("vector has non-finite components")]
    NonFinite,
    #[error("k must be at least 1")]
    InvalidK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(components: Vec<f64>) -> Result<Self, VectorError> {
        if components.iter().any(|x| !x.is_finite()) {
            return Err(VectorError::NonFinite);
        }
        Ok(DenseVector(components))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        math::norm(&self.0)
    }

    pub fn normalized(&self) -> Result<DenseVector, VectorError> {
        let n = self.norm();
        if n == 0.0 {
            return Err(VectorError::Degenerate);
        }
        Ok(DenseVector(self.0.iter().map(|x| x / n).collect()))
    }
}

/// `(a·b) / (‖a‖‖b‖)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &DenseVector, b: &DenseVector) -> Result<f64, VectorError> {
    if a.dim() != b.dim() {
        return Err(VectorError::Shape { expected: a.dim(), got: b.dim() });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(VectorError::Degenerate);
    }
    Ok((math::dot(a.as_slice(), b.as_slice()) / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VectorIndexReport {
    pub indexed: usize,
    pub zero_norm_excluded: usize,
    pub missing: usize,
}

/// Unit-normalized document vectors keyed by doc ordinal.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dimension: usize,
    /// `(ordinal, unit vector)`, ascending ordinal.
    entries: Vec<(u32, Vec<f64>)>,
    excluded: Vec<u32>,
    paper_ids: Vec<String>,
    model_id: Option<String>,
    snapshot_fingerprint: String,
}

impl VectorIndex {
    pub fn build(snapshot: &CorpusSnapshot) -> (Self, VectorIndexReport) {
        let dimension = snapshot.embedding_dim().unwrap_or(0);
        let mut entries = Vec::new();
        let mut excluded = Vec::new();
        let mut missing = 0;
        for (ordinal, id) in snapshot.ordinals().iter().enumerate() {
            match snapshot.embedding(id) {
                None => missing += 1,
                Some(v) => {
                    let n = math::norm(v);
                    if n == 0.0 {
                        excluded.push(ordinal as u32);
                    } else {
                        entries.push((ordinal as u32, v.iter().map(|x| x / n).collect()));
                    }
                }
            }
        }
        let report = VectorIndexReport { indexed: entries.len(), zero_norm_excluded: excluded.len(), missing };
        let index = VectorIndex {
            dimension,
            entries,
            excluded,
            paper_ids: snapshot.ordinals().to_vec(),
            model_id: snapshot.embedding_model().map(ToString::to_string),
            snapshot_fingerprint: snapshot.fingerprint().into(),
        };
        (index, report)
    }

    pub fn from_parts(
        dimension: usize,
        entries: Vec<(u32, Vec<f64>)>,
        excluded: Vec<u32>,
        paper_ids: Vec<String>,
        model_id: Option<String>,
        snapshot_fingerprint: String,
    ) -> Result<Self, VectorError> {
        for (ordinal, v) in &entries {
            if v.len() != dimension {
                return Err(VectorError::Shape { expected: dimension, got: v.len() });
            }
            if *ordinal as usize >= paper_ids.len() {
                return Err(VectorError::Shape { expected: paper_ids.len(), got: *ordinal as usize });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(VectorError::NonFinite);
            }
        }
        Ok(VectorIndex { dimension, entries, excluded, paper_ids, model_id, snapshot_fingerprint })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(u32, Vec<f64>)] {
        &self.entries
    }

    pub fn excluded(&self) -> &[u32] {
        &self.excluded
    }

    pub fn paper_ids(&self) -> &[String] {
        &self.paper_ids
    }

    pub fn model_id(&self) -> Option<&str> {
        self.model_id.as_deref()
    }

    pub fn snapshot_fingerprint(&self) -> &str {
        &self.snapshot_fingerprint
    }

    pub fn vector(&self, ordinal: usize) -> Option<&[f64]> {
        self.entries.binary_search_by_key(&(ordinal as u32), |(o, _)| *o).ok().map(|i| self.entries[i].1.as_slice())
    }

    /// Exhaustive top-`k` by cosine similarity; ties by paper id.
    pub fn knn_search(&self, query: &DenseVector, k: usize, filter: &FilterSet) -> Result<RankedList, VectorError> {
        if k == 0 {
            return Err(VectorError::InvalidK);
        }
        if query.dim() != self.dimension {
            return Err(VectorError::Shape { expected: self.dimension, got: query.dim() });
        }
        let q = query.normalized()?;
        let mut scored: Vec<(u32, f64)> = self
            .entries
            .iter()
            .filter(|(o, _)| filter.contains(*o as usize))
            .map(|(o, v)| (*o, math::dot(q.as_slice(), v).clamp(-1.0, 1.0)))
            .collect();
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.paper_ids[a.0 as usize].cmp(&self.paper_ids[b.0 as usize]))
        });
        scored.truncate(k);
        Ok(RankedList::from_scored(
            scored.into_iter().map(|(o, s)| (self.paper_ids[o as usize].clone(), s)),
            RankingSource::Semantic,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmbedError {
    #[error("embedder unavailable: {0}")]
    Unavailable(String),
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("embedder model `{got}` does not match the corpus encoder `{expected}`")]
    ModelMismatch { expected: String, got: String },
    #[error("nothing to embed after analysis")]
    EmptyText,
    #[error("embedder returned an invalid vector: {0}")]
    Invalid(VectorError),
}

/// Maps text into the index's embedding space.
pub trait Embedder: Send + Sync {
    fn model_id(&self) -> String;
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<DenseVector, EmbedError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbedderMode {
    ExternalService,
    DeterministicProjection,
}

/// Configuration of the query encoder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedderBinding {
    pub mode: EmbedderMode,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub dimension: usize,
    #[serde(default)]
    pub timeout_ms: Option<u64>,
}

impl EmbedderBinding {
    pub fn projection(seed: u64, dimension: usize) -> Self {
        EmbedderBinding {
            mode: EmbedderMode::DeterministicProjection,
            endpoint: None,
            seed: Some(seed),
            dimension,
            timeout_ms: None,
        }
    }

    pub fn external(endpoint: impl Into<String>, dimension: usize, timeout_ms: u64) -> Self {
        EmbedderBinding {
            mode: EmbedderMode::ExternalService,
            endpoint: Some(endpoint.into()),
            seed: None,
            dimension,
            timeout_ms: Some(timeout_ms),
        }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        match self.mode {
            EmbedderMode::ExternalService if self.endpoint.is_none() => {
                Err("external-service mode requires an endpoint")
            }
            EmbedderMode::DeterministicProjection if self.seed.is_none() => Err("projection mode requires a seed"),
            _ if self.dimension == 0 => Err("dimension must be positive"),
            _ => Ok(()),
        }
    }
}

/// Seeded hashing projection of analyzed tokens onto `dimension` axes.
///
/// Each token owns a pseudo-random direction derived from its bytes and the
/// seed; a text's vector is the normalized sum over its tokens. It carries no
/// semantics beyond token overlap.
#[derive(Debug, Clone)]
pub struct ProjectionEmbedder {
    seed: u64,
    dimension: usize,
    analyzer: AnalyzerConfig,
}

impl ProjectionEmbedder {
    pub fn new(seed: u64, dimension: usize) -> Self {
        ProjectionEmbedder { seed, dimension, analyzer: AnalyzerConfig::default() }
    }

    fn token_direction(&self, token: &str, out: &mut [f64]) {
        let base = math::hash_bytes(token.as_bytes(), self.seed);
        for (j, slot) in out.iter_mut().enumerate() {
            let bits = math::mix64(base ^ (j as u64).wrapping_mul(0xA24B_AED4_963E_E407));
            *slot += ((bits >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
        }
    }
}

impl Embedder for ProjectionEmbedder {
    fn model_id(&self) -> String {
        alloc::format!("projection:seed={}:dim={}", self.seed, self.dimension)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<DenseVector, EmbedError> {
        let tokens = analyze(text, &self.analyzer);
        if tokens.is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let mut v = vec![0.0; self.dimension];
        for t in &tokens {
            self.token_direction(t, &mut v);
        }
        DenseVector::new(v).and_then(|d| d.normalized()).map_err(EmbedError::Invalid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusInput, EmbeddingRecord, PaperInput, ValidationPolicy};

    fn v(x: &[f64]) -> DenseVector {
        DenseVector::new(x.to_vec()).unwrap()
    }

    fn snapshot(vectors: &[(&str, Vec<f64>)]) -> CorpusSnapshot {
        let papers = vectors
            .iter()
            .map(|(id, _)| PaperInput {
                paper_id: id.to_string(),
                arxiv_id: None,
                title: "t".into(),
                abstract_text: String::new(),
                publication_year: Some(2020),
                publication_date: None,
                submitted_date: None,
                doi: None,
                subject: String::new(),
            })
            .collect();
        let embeddings =
            vectors.iter().map(|(id, v)| EmbeddingRecord { paper_id: id.to_string(), vector: v.clone() }).collect();
        CorpusSnapshot::assemble(CorpusInput { papers, embeddings, ..Default::default() }, ValidationPolicy::Strict)
            .unwrap()
            .0
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine_similarity(&v(&[0.6, 0.8]), &v(&[0.6, 0.8])).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        let c = cosine_similarity(&v(&[1.0, 2.0, 3.0]), &v(&[4.0, 5.0, 6.0])).unwrap();
        assert!((c - 0.97463).abs() < 1e-5);
        assert_eq!(cosine_similarity(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])), Err(VectorError::Degenerate));
        assert!(matches!(cosine_similarity(&v(&[1.0]), &v(&[1.0, 0.0])), Err(VectorError::Shape { .. })));
        assert_eq!(DenseVector::new(alloc::vec![f64::INFINITY]), Err(VectorError::NonFinite));
    }

    #[test]
    fn build_normalizes_and_excludes() {
        let s = snapshot(&[("a", alloc::vec![3.0, 4.0]), ("b", alloc::vec![0.0, 0.0]), ("c", alloc::vec![1.0, 0.0])]);
        let (idx, report) = VectorIndex::build(&s);
        assert_eq!(idx.vector(0).unwrap(), &[0.6, 0.8]);
        assert_eq!(report.zero_norm_excluded, 1);
        assert_eq!(idx.len(), 2);
        assert!(idx.vector(1).is_none());
    }

    #[test]
    fn knn_examples() {
        let s = snapshot(&[("a", alloc::vec![3.0, 4.0]), ("b", alloc::vec![1.0, 0.0]), ("c", alloc::vec![0.0, 1.0])]);
        let (idx, _) = VectorIndex::build(&s);
        let r = idx.knn_search(&v(&[3.0, 4.0]), 1, &FilterSet::All).unwrap();
        assert_eq!(r.paper_ids(), alloc::vec!["a"]);
        assert!((r.entries[0].score - 1.0).abs() < 1e-12);
        let all = idx.knn_search(&v(&[1.0, 1.0]), 10, &FilterSet::All).unwrap();
        assert_eq!(all.len(), 3);
        assert_eq!(idx.knn_search(&v(&[0.0, 0.0]), 1, &FilterSet::All), Err(VectorError::Degenerate));
        assert_eq!(idx.knn_search(&v(&[1.0, 0.0]), 0, &FilterSet::All), Err(VectorError::InvalidK));
        let filtered = idx.knn_search(&v(&[3.0, 4.0]), 10, &FilterSet::from_ordinals([1, 2])).unwrap();
        assert_eq!(filtered.paper_ids(), alloc::vec!["c", "b"]);
    }

    #[test]
    fn projection_is_deterministic_and_unit() {
        let e = ProjectionEmbedder::new(42, 384);
        let a = e.embed("machine translation").unwrap();
        let b = e.embed("machine translation").unwrap();
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        assert_eq!(e.embed("the of and"), Err(EmbedError::EmptyText));
    }

    #[test]
    fn binding_validation() {
        assert!(EmbedderBinding::projection(1, 384).validate().is_ok());
        let mut b = EmbedderBinding::external("http://localhost:1", 384, 100);
        assert!(b.validate().is_ok());
        b.endpoint = None;
        assert!(b.validate().is_err());
        let mut p = EmbedderBinding::projection(1, 384);
        p.seed = None;
        assert!(p.validate().is_err());
    }
}
