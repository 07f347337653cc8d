//! Principal-axis projection used as the low-dimensional embedding step.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{self, Matrix, SeededRng};

use super::TopicError;

const MAX_POWER_ITERS: usize = 1000;
const CONVERGENCE: f64 = 1e-14;

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    // Two passes of classical Gram-Schmidt.
    for _ in 0..2 {
        for b in basis {
            let d = math::dot(v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = math::norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

/// `Xcᵀ (Xc v)` without forming the covariance.
fn apply_gram(centered: &Matrix, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; centered.cols()];
    for r in 0..centered.rows() {
        let row = centered.row(r);
        let s = math::dot(row, v);
        for (o, x) in out.iter_mut().zip(row) {
            *o += s * x;
        }
    }
    out
}

/// Principal axes of the row-centered data, most variance first, each with
/// its largest-magnitude component positive.
pub fn principal_axes(data: &Matrix, p: usize, seed: u64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (m, d) = (data.rows(), data.cols());
    let mut mean = vec![0.0; d];
    for r in 0..m {
        for (acc, x) in mean.iter_mut().zip(data.row(r)) {
            *acc += x;
        }
    }
    for x in mean.iter_mut() {
        *x /= m as f64;
    }
    let mut centered = data.clone();
    for r in 0..m {
        for (x, mu) in centered.row_mut(r).iter_mut().zip(&mean) {
            *x -= mu;
        }
    }

    let mut rng = SeededRng::new(seed);
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(p);
    for _ in 0..p {
        let mut v: Vec<f64> = (0..d).map(|_| rng.next_gaussian()).collect();
        orthogonalize(&mut v, &axes);
        normalize(&mut v);
        for _ in 0..MAX_POWER_ITERS {
            let mut u = apply_gram(&centered, &v);
            orthogonalize(&mut u, &axes);
            if normalize(&mut u) <= f64::MIN_POSITIVE {
                // Null direction: any unit vector orthogonal to the others.
                break;
            }
            let delta = 1.0 - math::dot(&u, &v).abs();
            v = u;
            if delta < CONVERGENCE {
                break;
            }
        }
        orthogonalize(&mut v, &axes);
        normalize(&mut v);
        let (pivot, _) =
            v.iter().enumerate().fold((0, 0.0f64), |best, (i, x)| if x.abs() > best.1 { (i, x.abs()) } else { best });
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        axes.push(v);
    }

    let denom = if m > 1 { (m - 1) as f64 } else { 1.0 };
    let mut with_var: Vec<(f64, Vec<f64>)> = axes
        .into_iter()
        .map(|a| {
            let g = apply_gram(&centered, &a);
            (math::dot(&g, &a) / denom, a)
        })
        .collect();
    with_var.sort_by(|a, b| b.0.total_cmp(&a.0));
    let variances = with_var.iter().map(|(v, _)| *v).collect();
    (variances, with_var.into_iter().map(|(_, a)| a).collect())
}

/// Projects centered rows onto the top `p` principal axes.
pub fn reduce_dimensions(embeddings: &Matrix, p: usize, seed: u64) -> Result<Matrix, TopicError> {
    let (m, d) = (embeddings.rows(), embeddings.cols());
    if p == 0 || m < p || p > d {
        return Err(TopicError::InvalidDimension { rows: m, dim: d, target: p });
    }
    let (_, axes) = principal_axes(embeddings, p, seed);
    let mut mean = vec![0.0; d];
    for r in 0..m {
        for (acc, x) in mean.iter_mut().zip(embeddings.row(r)) {
            *acc += x;
        }
    }
    for x in mean.iter_mut() {
        *x /= m as f64;
    }
    let mut out = Matrix::zeros(m, p);
    let mut centered = vec![0.0; d];
    for r in 0..m {
        for ((c, x), mu) in centered.iter_mut().zip(embeddings.row(r)).zip(&mean) {
            *c = x - mu;
        }
        for (j, a) in axes.iter().enumerate() {
            out.set(r, j, math::dot(&centered, a));
        }
    }
    Ok(out)
}
