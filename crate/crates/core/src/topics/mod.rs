//! Topic modeling over a retrieved document set.
//!
//! Two paths produce structurally identical output: TF-IDF + NMF with the
//! number of topics chosen by NPMI coherence, and principal-axis reduction of
//! document embeddings followed by density clustering and c-TF-IDF labels.

pub mod cluster;
pub mod coherence;
pub mod ctfidf;
pub mod nmf;
pub mod reduce;
pub mod tfidf;

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::Matrix;
use crate::text::{self, AnalyzerConfig, TextError};

pub use cluster::{density_cluster, ClusterModel, ClusterRadius, OUTLIER};
pub use coherence::{compute_npmi, npmi_from_counts, CoherenceReport, NpmiPair, NpmiResult, DEFAULT_EPSILON};
pub use ctfidf::{class_keywords, ctfidf_keywords, ctfidf_score, document_frequencies};
pub use nmf::{nmf_factorize, NmfConfig, NmfModel};
pub use reduce::{principal_axes, reduce_dimensions};
pub use tfidf::{build_tfidf, TfidfMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopicError {
    #[error("empty term matrix")]
    EmptyMatrix,
    #[error("invalid rank {k}: must be between 1 and {max}")]
    InvalidRank { k: usize, max: usize },
    #[error("matrix has negative or non-finite entries")]
    NegativeInput,
    #[error("topic needs at least 2 words, got {0}")]
    InvalidTopic(usize),
    #[error("cannot reduce {rows} rows of dimension {dim} to {target}")]
    InvalidDimension { rows: usize, dim: usize, target: usize },
    #[error("no documents to model")]
    EmptyRetrieval,
    #[error("every document is an outlier")]
    NoClusters,
    #[error("empty candidate list for k")]
    EmptyRange,
    #[error(transparent)]
    Text(#[from] TextError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyword {
    pub term: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    /// −1 collects outliers and unmodeled documents.
    pub topic_id: i64,
    pub keywords: Vec<Keyword>,
    pub document_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub paper_id: String,
    pub topic_id: i64,
    pub probability: f64,
    /// Full topic distribution on the NMF path; empty otherwise.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub distribution: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopicMode {
    #[default]
    Auto,
    Nmf,
    Cluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopicPath {
    Fallback,
    Nmf,
    Cluster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicConfig {
    pub mode: TopicMode,
    pub seed: u64,
    pub k_range: Vec<usize>,
    pub top_n: usize,
    pub min_doc_tokens: usize,
    pub fallback_below: usize,
    pub min_cluster_size: usize,
    pub reduced_dim: usize,
    pub radius: ClusterRadius,
    pub auto_min_docs: usize,
    pub auto_min_coverage: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub epsilon: f64,
}

impl Default for TopicConfig {
    fn default() -> Self {
        TopicConfig {
            mode: TopicMode::Auto,
            seed: 42,
            k_range: vec![5, 10, 15, 20, 25],
            top_n: 10,
            min_doc_tokens: 20,
            fallback_below: 10,
            min_cluster_size: 10,
            reduced_dim: 5,
            radius: ClusterRadius::Auto,
            auto_min_docs: 50,
            auto_min_coverage: 0.95,
            max_iter: 400,
            tol: 1e-5,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl TopicConfig {
    pub fn nmf(&self) -> NmfConfig {
        NmfConfig { max_iter: self.max_iter, tol: self.tol }
    }
}

/// One member of the retrieved set, in retrieval order.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicDocument {
    pub paper_id: String,
    /// Title and abstract joined by a space.
    pub text: String,
    pub embedding: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicStageOutput {
    pub path: TopicPath,
    pub summaries: Vec<TopicSummary>,
    pub assignments: Vec<TopicAssignment>,
    pub coherence: CoherenceReport,
    /// Coherence of every candidate k on the NMF path.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub k_sweep: Vec<CoherenceReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSelection {
    pub best_k: usize,
    pub reports: Vec<CoherenceReport>,
    pub model: NmfModel,
}

fn token_sets<D: AsRef<[String]>>(docs: &[D]) -> Vec<BTreeSet<String>> {
    docs.iter().map(|d| d.as_ref().iter().cloned().collect()).collect()
}

/// Mean NPMI of each topic's word list; lists shorter than two words are
/// skipped.
pub fn coherence_of(k: usize, topics: &[Vec<String>], doc_sets: &[BTreeSet<String>], epsilon: f64) -> CoherenceReport {
    let per_topic = topics
        .iter()
        .filter(|w| w.len() >= 2)
        .map(|w| compute_npmi(w, doc_sets, epsilon).map(|r| r.mean_npmi).unwrap_or(-1.0))
        .collect();
    CoherenceReport::from_topics(k, per_topic)
}

fn nmf_topic_words(model: &NmfModel, terms: &[String], n: usize) -> Vec<Vec<String>> {
    (0..model.k).map(|t| model.top_terms(t, n).into_iter().map(|i| terms[i].clone()).collect()).collect()
}

/// Fits one model per candidate k and keeps the most coherent, the smaller
/// k winning ties.
pub fn select_k(
    x: &TfidfMatrix,
    k_range: &[usize],
    seed: u64,
    doc_sets: &[BTreeSet<String>],
    config: &NmfConfig,
    top_words: usize,
    epsilon: f64,
) -> Result<KSelection, TopicError> {
    if k_range.is_empty() {
        return Err(TopicError::EmptyRange);
    }
    let mut reports = Vec::with_capacity(k_range.len());
    let mut best: Option<(f64, usize, NmfModel)> = None;
    for &k in k_range {
        let model = nmf_factorize(&x.matrix, k, seed, config)?;
        let report = coherence_of(k, &nmf_topic_words(&model, &x.terms, top_words), doc_sets, epsilon);
        let better = match &best {
            None => true,
            Some((score, bk, _)) => report.mean_npmi > *score || (report.mean_npmi == *score && k < *bk),
        };
        if better {
            best = Some((report.mean_npmi, k, model));
        }
        reports.push(report);
    }
    let (_, best_k, model) = best.expect("non-empty range");
    Ok(KSelection { best_k, reports, model })
}

/// Row-normalized `W`; an all-zero row gets a uniform distribution and
/// topic −1.
pub fn assign_topics_nmf<S: AsRef<str>>(model: &NmfModel, paper_ids: &[S]) -> Vec<TopicAssignment> {
    let k = model.k;
    paper_ids
        .iter()
        .enumerate()
        .map(|(r, id)| {
            let row = model.w.row(r);
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                let distribution: Vec<f64> = row.iter().map(|w| w / total).collect();
                let mut best = 0;
                for (t, p) in distribution.iter().enumerate() {
                    if *p > distribution[best] {
                        best = t;
                    }
                }
                TopicAssignment {
                    paper_id: String::from(id.as_ref()),
                    topic_id: best as i64,
                    probability: distribution[best],
                    distribution,
                }
            } else {
                TopicAssignment {
                    paper_id: String::from(id.as_ref()),
                    topic_id: OUTLIER,
                    probability: 1.0,
                    distribution: vec![1.0 / k as f64; k],
                }
            }
        })
        .collect()
}

fn outlier_assignment(paper_id: &str) -> TopicAssignment {
    TopicAssignment { paper_id: String::from(paper_id), topic_id: OUTLIER, probability: 1.0, distribution: Vec::new() }
}

fn with_outlier_summary(mut summaries: Vec<TopicSummary>, assignments: &[TopicAssignment]) -> Vec<TopicSummary> {
    for s in summaries.iter_mut() {
        s.document_count = assignments.iter().filter(|a| a.topic_id == s.topic_id).count();
    }
    let outliers = assignments.iter().filter(|a| a.topic_id == OUTLIER).count();
    if outliers > 0 {
        summaries.insert(0, TopicSummary { topic_id: OUTLIER, keywords: Vec::new(), document_count: outliers });
    }
    summaries
}

fn fallback(docs: &[TopicDocument], tokens: &[Vec<String>], config: &TopicConfig) -> TopicStageOutput {
    let df = document_frequencies(tokens);
    let keywords = class_keywords(tokens, &df, tokens.len(), config.top_n);
    let words: Vec<String> = keywords.iter().map(|k| k.term.clone()).collect();
    let coherence = coherence_of(1, &[words], &token_sets(tokens), config.epsilon);
    let assignments = docs
        .iter()
        .map(|d| TopicAssignment {
            paper_id: d.paper_id.clone(),
            topic_id: 0,
            probability: 1.0,
            distribution: vec![1.0],
        })
        .collect();
    TopicStageOutput {
        path: TopicPath::Fallback,
        summaries: vec![TopicSummary { topic_id: 0, keywords, document_count: docs.len() }],
        assignments,
        coherence,
        k_sweep: Vec::new(),
    }
}

fn nmf_path(
    docs: &[TopicDocument],
    tokens: &[Vec<String>],
    eligible: &[usize],
    config: &TopicConfig,
) -> Result<TopicStageOutput, TopicError> {
    let elig_tokens: Vec<&[String]> = eligible.iter().map(|&i| tokens[i].as_slice()).collect();
    let vocabulary = text::build_vocabulary(&elig_tokens, 2, 1.0)?;
    if vocabulary.is_empty() {
        return Ok(fallback(docs, tokens, config));
    }
    let x = build_tfidf(&elig_tokens, &vocabulary)?;
    let max_k = x.rows().min(x.cols());
    let mut ks: Vec<usize> = config.k_range.iter().copied().filter(|&k| k >= 1 && k <= max_k).collect();
    if ks.is_empty() {
        ks.push(max_k);
    }
    let doc_sets: Vec<BTreeSet<String>> = elig_tokens.iter().map(|d| d.iter().cloned().collect()).collect();
    let selection = select_k(&x, &ks, config.seed, &doc_sets, &config.nmf(), config.top_n, config.epsilon)?;
    let model = &selection.model;
    let elig_ids: Vec<&str> = eligible.iter().map(|&i| docs[i].paper_id.as_str()).collect();
    let elig_assign = assign_topics_nmf(model, &elig_ids);
    let mut assignments: Vec<TopicAssignment> = docs.iter().map(|d| outlier_assignment(&d.paper_id)).collect();
    for (&i, a) in eligible.iter().zip(elig_assign) {
        assignments[i] = a;
    }
    let summaries: Vec<TopicSummary> = (0..model.k)
        .map(|t| {
            let row = model.h.row(t);
            TopicSummary {
                topic_id: t as i64,
                keywords: model
                    .top_terms(t, config.top_n)
                    .into_iter()
                    .map(|i| Keyword { term: x.terms[i].clone(), weight: row[i] })
                    .collect(),
                document_count: 0,
            }
        })
        .collect();
    let coherence = selection.reports.iter().find(|r| r.k == selection.best_k).cloned().expect("best k was evaluated");
    Ok(TopicStageOutput {
        path: TopicPath::Nmf,
        summaries: with_outlier_summary(summaries, &assignments),
        assignments,
        coherence,
        k_sweep: selection.reports,
    })
}

fn cluster_path(
    docs: &[TopicDocument],
    tokens: &[Vec<String>],
    eligible: &[usize],
    config: &TopicConfig,
) -> Result<TopicStageOutput, TopicError> {
    let embedded: Vec<usize> = eligible.iter().copied().filter(|&i| docs[i].embedding.is_some()).collect();
    let rows: Vec<Vec<f64>> = embedded.iter().map(|&i| docs[i].embedding.clone().unwrap_or_default()).collect();
    let dim = rows.first().map_or(0, Vec::len);
    let p = config.reduced_dim;
    if rows.len() < p || p >= dim || rows.iter().any(|r| r.len() != dim) {
        return Err(TopicError::InvalidDimension { rows: rows.len(), dim, target: p });
    }
    let reduced = reduce_dimensions(&Matrix::from_rows(&rows), p, config.seed)?;
    let model = density_cluster(&reduced, config.min_cluster_size, config.radius);

    let mut assignments: Vec<TopicAssignment> = docs.iter().map(|d| outlier_assignment(&d.paper_id)).collect();
    for (&i, &label) in embedded.iter().zip(&model.labels) {
        if label != OUTLIER {
            assignments[i].topic_id = label;
        }
    }
    let elig_tokens: Vec<&[String]> = eligible.iter().map(|&i| tokens[i].as_slice()).collect();
    let labels: Vec<i64> = eligible.iter().map(|&i| assignments[i].topic_id).collect();
    let summaries = match ctfidf_keywords(&labels, &elig_tokens, elig_tokens.len(), config.top_n) {
        Ok(s) => s,
        Err(TopicError::NoClusters) => Vec::new(),
        Err(e) => return Err(e),
    };
    let words: Vec<Vec<String>> =
        summaries.iter().map(|s| s.keywords.iter().map(|k| k.term.clone()).collect()).collect();
    let doc_sets: Vec<BTreeSet<String>> = elig_tokens.iter().map(|d| d.iter().cloned().collect()).collect();
    let coherence = coherence_of(model.cluster_count, &words, &doc_sets, config.epsilon);
    Ok(TopicStageOutput {
        path: TopicPath::Cluster,
        summaries: with_outlier_summary(summaries, &assignments),
        assignments,
        coherence,
        k_sweep: Vec::new(),
    })
}

/// Models the retrieved set `docs` (in retrieval order). Assignments come
/// back in the same order, one per document.
pub fn run_topic_stage(
    docs: &[TopicDocument],
    analyzer: &AnalyzerConfig,
    config: &TopicConfig,
) -> Result<TopicStageOutput, TopicError> {
    if docs.is_empty() {
        return Err(TopicError::EmptyRetrieval);
    }
    let tokens: Vec<Vec<String>> = docs.iter().map(|d| text::analyze(&d.text, analyzer)).collect();
    let eligible: Vec<usize> = (0..docs.len()).filter(|&i| tokens[i].len() >= config.min_doc_tokens).collect();
    if eligible.len() < config.fallback_below {
        return Ok(fallback(docs, &tokens, config));
    }
    let path = match config.mode {
        TopicMode::Nmf => TopicPath::Nmf,
        TopicMode::Cluster => TopicPath::Cluster,
        TopicMode::Auto => {
            let covered = docs.iter().filter(|d| d.embedding.is_some()).count();
            let dim_ok = docs.iter().find_map(|d| d.embedding.as_ref()).is_some_and(|e| e.len() > config.reduced_dim);
            if docs.len() >= config.auto_min_docs
                && covered as f64 >= config.auto_min_coverage * docs.len() as f64
                && dim_ok
            {
                TopicPath::Cluster
            } else {
                TopicPath::Nmf
            }
        }
    };
    match path {
        TopicPath::Cluster => cluster_path(docs, &tokens, &eligible, config),
        _ => nmf_path(docs, &tokens, &eligible, config),
    }
}
