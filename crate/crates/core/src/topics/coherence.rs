//! Document-level NPMI coherence.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;

use super::TopicError;

pub const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpmiPair {
    pub first: String,
    pub second: String,
    pub npmi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpmiResult {
    pub pairs: Vec<NpmiPair>,
    pub mean_npmi: f64,
}

/// Mean pairwise NPMI per topic for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub k: usize,
    pub per_topic: Vec<f64>,
    pub mean_npmi: f64,
}

impl CoherenceReport {
    pub fn from_topics(k: usize, per_topic: Vec<f64>) -> Self {
        let mean_npmi = if per_topic.is_empty() { 0.0 } else { per_topic.iter().sum::<f64>() / per_topic.len() as f64 };
        CoherenceReport { k, per_topic, mean_npmi }
    }
}

/// NPMI from document counts over `total` documents. Never co-occurring
/// words score −1; words present in every document together score 1.
pub fn npmi_from_counts(df_i: usize, df_j: usize, co: usize, total: usize, epsilon: f64) -> f64 {
    if co == 0 || total == 0 {
        return -1.0;
    }
    if co == total {
        return 1.0;
    }
    let n = total as f64;
    let (pi, pj, pij) = (df_i as f64 / n, df_j as f64 / n, co as f64 / n);
    let pmi = math::ln((pij + epsilon) / (pi * pj));
    (pmi / -math::ln(pij + epsilon)).clamp(-1.0, 1.0)
}

/// Pairwise NPMI over `words`, with probabilities estimated as document
/// frequencies in `docs`.
pub fn compute_npmi<W: AsRef<str>>(
    words: &[W],
    docs: &[BTreeSet<String>],
    epsilon: f64,
) -> Result<NpmiResult, TopicError> {
    if words.len() < 2 {
        return Err(TopicError::InvalidTopic(words.len()));
    }
    let presence: Vec<Vec<bool>> =
        words.iter().map(|w| docs.iter().map(|d| d.contains(w.as_ref())).collect()).collect();
    let df: Vec<usize> = presence.iter().map(|p| p.iter().filter(|&&b| b).count()).collect();
    let mut pairs = Vec::new();
    let mut sum = 0.0;
    for i in 0..words.len() {
        for j in i + 1..words.len() {
            let co = presence[i].iter().zip(&presence[j]).filter(|(a, b)| **a && **b).count();
            let v = npmi_from_counts(df[i], df[j], co, docs.len(), epsilon);
            sum += v;
            pairs.push(NpmiPair {
                first: String::from(words[i].as_ref()),
                second: String::from(words[j].as_ref()),
                npmi: v,
            });
        }
    }
    let mean_npmi = sum / pairs.len() as f64;
    Ok(NpmiResult { pairs, mean_npmi })
}
