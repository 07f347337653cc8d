//! Lee–Seung multiplicative updates on the Frobenius objective.

use alloc::vec::Vec;

use crate::math::{self, Matrix, SeededRng};

use super::TopicError;

const DENOM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmfConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for NmfConfig {
    fn default() -> Self {
        NmfConfig { max_iter: 400, tol: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmfModel {
    /// Documents × topics.
    pub w: Matrix,
    /// Topics × terms.
    pub h: Matrix,
    pub k: usize,
    pub final_objective: f64,
    pub iterations_run: usize,
    /// Objective at initialization followed by one value per accepted update.
    pub objective_history: Vec<f64>,
}

impl NmfModel {
    /// Term indices of a topic by descending weight, ties by index.
    pub fn top_terms(&self, topic: usize, n: usize) -> Vec<usize> {
        let row = self.h.row(topic);
        let mut idx: Vec<usize> = (0..row.len()).collect();
        idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        idx.truncate(n);
        idx
    }
}

fn objective(x: &Matrix, w: &Matrix, h: &Matrix) -> f64 {
    x.sq_distance(&w.matmul(h))
}

/// Factorizes `x ≈ W H` with `k` topics. Initialization draws `W` then `H`
/// uniformly from `(0, 1]` scaled by `sqrt(mean(x) / k)`.
pub fn nmf_factorize(x: &Matrix, k: usize, seed: u64, config: &NmfConfig) -> Result<NmfModel, TopicError> {
    let (m, n) = (x.rows(), x.cols());
    if k < 1 || k > m.min(n) {
        return Err(TopicError::InvalidRank { k, max: m.min(n) });
    }
    if x.as_slice().iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(TopicError::NegativeInput);
    }
    let scale = math::sqrt(x.mean() / k as f64);
    let mut rng = SeededRng::new(seed);
    let mut w = Matrix::zeros(m, k);
    for r in 0..m {
        for c in 0..k {
            w.set(r, c, rng.next_open01() * scale);
        }
    }
    let mut h = Matrix::zeros(k, n);
    for r in 0..k {
        for c in 0..n {
            h.set(r, c, rng.next_open01() * scale);
        }
    }

    let mut current = objective(x, &w, &h);
    let mut history = Vec::with_capacity(config.max_iter + 1);
    history.push(current);
    let mut iterations = 0;
    while iterations < config.max_iter && current > 0.0 {
        let wtx = w.t_matmul(x);
        let wtwh = w.t_matmul(&w).matmul(&h);
        let mut h_next = h.clone();
        for r in 0..k {
            for c in 0..n {
                h_next.set(r, c, h.get(r, c) * wtx.get(r, c) / (wtwh.get(r, c) + DENOM_EPS));
            }
        }
        let xht = x.matmul_t(&h_next);
        let whht = w.matmul(&h_next.matmul_t(&h_next));
        let mut w_next = w.clone();
        for r in 0..m {
            for c in 0..k {
                w_next.set(r, c, w.get(r, c) * xht.get(r, c) / (whht.get(r, c) + DENOM_EPS));
            }
        }
        let next = objective(x, &w_next, &h_next);
        if next.is_nan() || next > current {
            break;
        }
        let improvement = (current - next) / current;
        w = w_next;
        h = h_next;
        current = next;
        history.push(current);
        iterations += 1;
        if improvement < config.tol {
            break;
        }
    }
    Ok(NmfModel { w, h, k, final_objective: current, iterations_run: iterations, objective_history: history })
}
