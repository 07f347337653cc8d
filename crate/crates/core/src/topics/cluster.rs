//! Density clustering over reduced document vectors.
//!
//! `ClusterRadius::Auto` builds a single-linkage hierarchy over mutual
//! reachability distances and keeps the clusters of greatest excess of mass.
//! `ClusterRadius::Fixed` cuts density-reachable components at one radius.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{self, Matrix};

pub const OUTLIER: i64 = -1;
const MAX_LAMBDA: f64 = 1e150;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum ClusterRadius {
    #[default]
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    /// Reduced vectors, one row per document.
    pub points: Matrix,
    /// Cluster id per row, or −1.
    pub labels: Vec<i64>,
    pub cluster_count: usize,
}

impl ClusterModel {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.cluster_count];
        for &l in &self.labels {
            if l >= 0 {
                sizes[l as usize] += 1;
            }
        }
        sizes
    }

    pub fn outlier_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == OUTLIER).count()
    }
}

fn distance(points: &Matrix, a: usize, b: usize) -> f64 {
    let (x, y) = (points.row(a), points.row(b));
    math::sqrt(x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum())
}

/// Distance from each point to its `k`-th nearest neighbor, the point itself
/// being the first.
pub fn core_distances(points: &Matrix, k: usize) -> Vec<f64> {
    let m = points.rows();
    let mut buf = vec![0.0; m];
    (0..m)
        .map(|i| {
            for (j, d) in buf.iter_mut().enumerate() {
                *d = distance(points, i, j);
            }
            let idx = k.clamp(1, m) - 1;
            let (_, v, _) = buf.select_nth_unstable_by(idx, |a, b| a.total_cmp(b));
            *v
        })
        .collect()
}

struct Mst {
    /// (weight, a, b) sorted by weight, then endpoints.
    edges: Vec<(f64, usize, usize)>,
}

fn mutual_reachability_mst(points: &Matrix, core: &[f64]) -> Mst {
    let m = points.rows();
    let mut in_tree = vec![false; m];
    let mut best = vec![f64::INFINITY; m];
    let mut parent = vec![0usize; m];
    let mut edges = Vec::with_capacity(m.saturating_sub(1));
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..m {
        let mut next = usize::MAX;
        let mut next_w = f64::INFINITY;
        for j in 0..m {
            if in_tree[j] {
                continue;
            }
            let w = distance(points, current, j).max(core[current]).max(core[j]);
            if w < best[j] {
                best[j] = w;
                parent[j] = current;
            }
            if best[j] < next_w || next == usize::MAX {
                next_w = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        let (a, b) = (parent[next].min(next), parent[next].max(next));
        edges.push((next_w, a, b));
        current = next;
    }
    edges.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    Mst { edges }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

struct Dendrogram {
    /// Internal node `m + i`: (left, right, weight, size).
    merges: Vec<(usize, usize, f64, usize)>,
    leaves: usize,
}

impl Dendrogram {
    fn size(&self, node: usize) -> usize {
        if node < self.leaves {
            1
        } else {
            self.merges[node - self.leaves].3
        }
    }

    fn collect_leaves(&self, node: usize, out: &mut Vec<usize>) {
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            if n < self.leaves {
                out.push(n);
            } else {
                let (l, r, _, _) = self.merges[n - self.leaves];
                stack.push(r);
                stack.push(l);
            }
        }
    }
}

fn single_linkage(mst: &Mst, m: usize) -> Dendrogram {
    let mut uf = UnionFind::new(2 * m);
    let mut merges = Vec::with_capacity(m.saturating_sub(1));
    let mut size = vec![1usize; 2 * m];
    for &(w, a, b) in &mst.edges {
        let (ra, rb) = (uf.find(a), uf.find(b));
        let node = m + merges.len();
        let s = size[ra] + size[rb];
        size[node] = s;
        uf.parent[ra] = node;
        uf.parent[rb] = node;
        merges.push((ra, rb, w, s));
    }
    Dendrogram { merges, leaves: m }
}

fn lambda(w: f64) -> f64 {
    if w > 0.0 {
        (1.0 / w).min(MAX_LAMBDA)
    } else {
        MAX_LAMBDA
    }
}

struct CondensedCluster {
    birth: f64,
    stability: f64,
    children: Vec<usize>,
    members: Vec<usize>,
}

fn condense(dendro: &Dendrogram, mcs: usize) -> Vec<CondensedCluster> {
    let root = dendro.leaves + dendro.merges.len() - 1;
    let mut clusters = vec![CondensedCluster { birth: 0.0, stability: 0.0, children: Vec::new(), members: Vec::new() }];
    let mut stack = vec![(root, 0usize)];
    while let Some((node, c)) = stack.pop() {
        if node < dendro.leaves {
            clusters[c].members.push(node);
            continue;
        }
        let (l, r, w, _) = dendro.merges[node - dendro.leaves];
        let lam = lambda(w);
        let (sl, sr) = (dendro.size(l), dendro.size(r));
        let birth = clusters[c].birth;
        match (sl >= mcs, sr >= mcs) {
            (true, true) => {
                clusters[c].stability += (lam - birth) * (sl + sr) as f64;
                for child in [l, r] {
                    let id = clusters.len();
                    clusters.push(CondensedCluster {
                        birth: lam,
                        stability: 0.0,
                        children: Vec::new(),
                        members: Vec::new(),
                    });
                    clusters[c].children.push(id);
                    stack.push((child, id));
                }
            }
            (true, false) | (false, true) => {
                let (big, small, s_small) = if sl >= mcs { (l, r, sr) } else { (r, l, sl) };
                clusters[c].stability += (lam - birth) * s_small as f64;
                let mut pts = Vec::new();
                dendro.collect_leaves(small, &mut pts);
                clusters[c].members.extend(pts);
                stack.push((big, c));
            }
            (false, false) => {
                clusters[c].stability += (lam - birth) * (sl + sr) as f64;
                let mut pts = Vec::new();
                dendro.collect_leaves(node, &mut pts);
                clusters[c].members.extend(pts);
            }
        }
    }
    clusters
}

fn select_clusters(clusters: &[CondensedCluster]) -> Vec<bool> {
    let n = clusters.len();
    let mut selected = vec![false; n];
    let mut subtree = vec![0.0; n];
    // Children always have larger ids than their parent.
    for c in (1..n).rev() {
        let child_sum: f64 = clusters[c].children.iter().map(|&ch| subtree[ch]).sum();
        if clusters[c].children.is_empty() || clusters[c].stability >= child_sum {
            selected[c] = true;
            subtree[c] = clusters[c].stability;
            let mut stack: Vec<usize> = clusters[c].children.clone();
            while let Some(d) = stack.pop() {
                selected[d] = false;
                stack.extend(clusters[d].children.iter().copied());
            }
        } else {
            subtree[c] = child_sum;
        }
    }
    if clusters[0].children.is_empty() {
        selected[0] = true;
    }
    selected
}

fn renumber(raw: &[i64]) -> (Vec<i64>, usize) {
    let mut map: Vec<(i64, i64)> = Vec::new();
    let mut labels = Vec::with_capacity(raw.len());
    for &r in raw {
        if r == OUTLIER {
            labels.push(OUTLIER);
            continue;
        }
        let id = match map.iter().find(|(k, _)| *k == r) {
            Some((_, v)) => *v,
            None => {
                let v = map.len() as i64;
                map.push((r, v));
                v
            }
        };
        labels.push(id);
    }
    (labels, map.len())
}

fn hierarchy_labels(points: &Matrix, mcs: usize) -> Vec<i64> {
    let m = points.rows();
    let core = core_distances(points, mcs);
    let mst = mutual_reachability_mst(points, &core);
    let dendro = single_linkage(&mst, m);
    let clusters = condense(&dendro, mcs);
    let selected = select_clusters(&clusters);
    let mut raw = vec![OUTLIER; m];
    for (c, &sel) in selected.iter().enumerate() {
        if !sel {
            continue;
        }
        let mut stack = vec![c];
        while let Some(d) = stack.pop() {
            for &p in &clusters[d].members {
                raw[p] = c as i64;
            }
            stack.extend(clusters[d].children.iter().copied());
        }
    }
    raw
}

fn radius_labels(points: &Matrix, mcs: usize, radius: f64) -> Vec<i64> {
    let m = points.rows();
    let neighbors: Vec<Vec<usize>> =
        (0..m).map(|i| (0..m).filter(|&j| distance(points, i, j) <= radius).collect()).collect();
    let is_core: Vec<bool> = neighbors.iter().map(|n| n.len() >= mcs).collect();
    let mut uf = UnionFind::new(m);
    for i in 0..m {
        if !is_core[i] {
            continue;
        }
        for &j in &neighbors[i] {
            if is_core[j] {
                let (a, b) = (uf.find(i), uf.find(j));
                if a != b {
                    uf.parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut raw = vec![OUTLIER; m];
    for i in 0..m {
        if is_core[i] {
            raw[i] = uf.find(i) as i64;
        } else {
            let nearest = neighbors[i]
                .iter()
                .copied()
                .filter(|&j| is_core[j])
                .min_by(|&a, &b| distance(points, i, a).total_cmp(&distance(points, i, b)).then(a.cmp(&b)));
            if let Some(j) = nearest {
                raw[i] = uf.find(j) as i64;
            }
        }
    }
    let mut counts: Vec<usize> = vec![0; m];
    for &r in &raw {
        if r >= 0 {
            counts[r as usize] += 1;
        }
    }
    for r in raw.iter_mut() {
        if *r >= 0 && counts[*r as usize] < mcs {
            *r = OUTLIER;
        }
    }
    raw
}

/// Labels every row with a cluster id or −1. Cluster ids are numbered in
/// order of each cluster's lowest row index.
pub fn density_cluster(points: &Matrix, min_cluster_size: usize, radius: ClusterRadius) -> ClusterModel {
    let m = points.rows();
    let mcs = min_cluster_size.max(2);
    let raw = if m < mcs {
        vec![OUTLIER; m]
    } else {
        match radius {
            ClusterRadius::Auto => hierarchy_labels(points, mcs),
            ClusterRadius::Fixed(r) => radius_labels(points, mcs, r),
        }
    };
    let (labels, cluster_count) = renumber(&raw);
    ClusterModel { points: points.clone(), labels, cluster_count }
}
