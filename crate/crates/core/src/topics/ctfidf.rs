//! Class-based TF-IDF keyword extraction.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::math;

use super::cluster::OUTLIER;
use super::{Keyword, TopicError, TopicSummary};

/// `(tf / class_len) · ln(N / df)`.
pub fn ctfidf_score(tf: usize, class_len: usize, df: usize, total_docs: usize) -> f64 {
    if class_len == 0 || df == 0 {
        return 0.0;
    }
    (tf as f64 / class_len as f64) * math::ln(total_docs as f64 / df as f64)
}

/// Document frequencies over `docs`.
pub fn document_frequencies<D, T>(docs: &[D]) -> BTreeMap<String, usize>
where
    D: AsRef<[T]>,
    T: AsRef<str>,
{
    let mut df = BTreeMap::new();
    for doc in docs {
        let unique: BTreeSet<&str> = doc.as_ref().iter().map(AsRef::as_ref).collect();
        for t in unique {
            *df.entry(String::from(t)).or_insert(0) += 1;
        }
    }
    df
}

/// Top `top_n` positive-scoring terms of one class, given the class's
/// documents and corpus-level `df` over `total_docs` documents.
pub fn class_keywords<D, T>(
    class_docs: &[D],
    df: &BTreeMap<String, usize>,
    total_docs: usize,
    top_n: usize,
) -> Vec<Keyword>
where
    D: AsRef<[T]>,
    T: AsRef<str>,
{
    let mut tf: BTreeMap<&str, usize> = BTreeMap::new();
    let mut class_len = 0;
    for doc in class_docs {
        for t in doc.as_ref() {
            *tf.entry(t.as_ref()).or_insert(0) += 1;
            class_len += 1;
        }
    }
    let mut scored: Vec<Keyword> = tf
        .into_iter()
        .map(|(t, c)| Keyword {
            term: String::from(t),
            weight: ctfidf_score(c, class_len, df.get(t).copied().unwrap_or(0), total_docs),
        })
        .filter(|k| k.weight > 0.0)
        .collect();
    scored.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.term.cmp(&b.term)));
    scored.truncate(top_n);
    scored
}

/// One summary per non-outlier cluster, ordered by cluster id. `labels` and
/// `docs` are parallel; document frequencies are taken over all `docs`.
pub fn ctfidf_keywords<D, T>(
    labels: &[i64],
    docs: &[D],
    total_docs: usize,
    top_n: usize,
) -> Result<Vec<TopicSummary>, TopicError>
where
    D: AsRef<[T]>,
    T: AsRef<str>,
{
    let mut classes: BTreeMap<i64, Vec<&D>> = BTreeMap::new();
    for (l, d) in labels.iter().zip(docs) {
        if *l != OUTLIER {
            classes.entry(*l).or_default().push(d);
        }
    }
    if classes.is_empty() {
        return Err(TopicError::NoClusters);
    }
    let df = document_frequencies(docs);
    Ok(classes
        .into_iter()
        .map(|(id, members)| {
            let owned: Vec<&[T]> = members.iter().map(|d| d.as_ref()).collect();
            TopicSummary {
                topic_id: id,
                keywords: class_keywords(&owned, &df, total_docs, top_n),
                document_count: members.len(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn hand_evaluated_score() {
        let s = ctfidf_score(2, 3, 5, 10);
        assert!((s - 0.4621).abs() < 1e-4);
        let mut df = BTreeMap::new();
        df.insert(String::from("graph"), 5);
        df.insert(String::from("neural"), 10);
        let kws = class_keywords(&[vec!["graph", "graph", "neural"]], &df, 10, 10);
        assert_eq!(kws.len(), 1);
        assert_eq!(kws[0].term, "graph");
        assert!((kws[0].weight - (2.0 / 3.0) * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn identical_clusters_share_keywords() {
        let docs = vec![
            vec!["alpha", "beta"],
            vec!["alpha", "gamma"],
            vec!["alpha", "beta"],
            vec!["alpha", "gamma"],
            vec!["delta"],
        ];
        let labels = vec![0, 0, 1, 1, -1];
        let s = ctfidf_keywords(&labels, &docs, docs.len(), 10).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].keywords, s[1].keywords);
        assert!(s[0].keywords.iter().all(|k| k.term != "delta"));
    }

    #[test]
    fn all_outliers_signal_no_clusters() {
        let docs = vec![vec!["a"]];
        assert_eq!(ctfidf_keywords(&[-1], &docs, 1, 10), Err(TopicError::NoClusters));
    }
}
