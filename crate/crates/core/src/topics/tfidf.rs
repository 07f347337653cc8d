use alloc::string::String;
use alloc::vec::Vec;

use crate::math::{self, Matrix};
use crate::text::Vocabulary;

use super::TopicError;

/// Documents × terms, `tf(t, d) · ln(N / df(t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfMatrix {
    pub matrix: Matrix,
    pub terms: Vec<String>,
}

impl TfidfMatrix {
    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }
}

pub fn build_tfidf<D, T>(docs: &[D], vocabulary: &Vocabulary) -> Result<TfidfMatrix, TopicError>
where
    D: AsRef<[T]>,
    T: AsRef<str>,
{
    if vocabulary.is_empty() {
        return Err(TopicError::EmptyMatrix);
    }
    let n_docs = vocabulary.total_docs() as f64;
    let idf: Vec<f64> = (0..vocabulary.len()).map(|i| math::ln(n_docs / vocabulary.df(i) as f64)).collect();
    let mut matrix = Matrix::zeros(docs.len(), vocabulary.len());
    for (r, doc) in docs.iter().enumerate() {
        let row = matrix.row_mut(r);
        for t in doc.as_ref() {
            if let Some(i) = vocabulary.index_of(t.as_ref()) {
                row[i] += 1.0;
            }
        }
        for (w, f) in row.iter_mut().zip(&idf) {
            *w *= f;
        }
    }
    let terms = (0..vocabulary.len()).map(|i| String::from(vocabulary.term(i))).collect();
    Ok(TfidfMatrix { matrix, terms })
}
