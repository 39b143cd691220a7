//! Firm-to-firm graphs: the analyst coverage projection, correlation and
//! industry ablation networks, random edge deletion, and topology statistics.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;
use serde::Serialize;

use crate::market_data::{EstimateRecord, IndustryMap, PricePanel};
use crate::math::{ln, pearson, round};
use crate::seed;
use crate::{Error, Result};

pub const DEFAULT_LOOKBACK: usize = 252;
pub const DEFAULT_CORRELATION_WINDOW: usize = 252;
pub const DEFAULT_CORRELATION_PERCENTILE: f64 = 0.90;
pub const DEFAULT_DELETE_FRACTION: f64 = 0.60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Edge {
    /// Smaller endpoint.
    pub src: usize,
    pub dst: usize,
    pub weight: u32,
}

/// Dated undirected weighted graph over `n` firms. Edges are stored once with
/// `src < dst`, sorted, and without self-loops.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageGraph {
    pub day: usize,
    n: usize,
    edges: Vec<Edge>,
    pub lookback: usize,
}

impl CoverageGraph {
    /// Builds a graph from `(i, j, weight)` triples. Endpoints are
    /// normalized to `i < j`; self-loops and zero weights are discarded and
    /// duplicate pairs keep the largest weight.
    pub fn from_edges(day: usize, n: usize, lookback: usize, edges: impl IntoIterator<Item = (usize, usize, u32)>) -> Result<Self> {
        let mut map: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::OutOfBounds {
                    index: a.max(b),
                    len: n,
                });
            }
            if a == b || w == 0 {
                continue;
            }
            let key = (a.min(b), a.max(b));
            let e = map.entry(key).or_insert(0);
            *e = (*e).max(w);
        }
        Ok(Self {
            day,
            n,
            edges: map
                .into_iter()
                .map(|((src, dst), weight)| Edge { src, dst, weight })
                .collect(),
            lookback,
        })
    }

    pub fn empty(day: usize, n: usize) -> Self {
        Self {
            day,
            n,
            edges: Vec::new(),
            lookback: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_set(&self) -> BTreeSet<(usize, usize)> {
        self.edges.iter().map(|e| (e.src, e.dst)).collect()
    }

    pub fn weight(&self, a: usize, b: usize) -> u32 {
        let key = (a.min(b), a.max(b));
        self.edges
            .binary_search_by(|e| (e.src, e.dst).cmp(&key))
            .map(|k| self.edges[k].weight)
            .unwrap_or(0)
    }

    /// Neighbour lists with weights, one per node.
    pub fn adjacency_lists(&self) -> Vec<Vec<(usize, u32)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.src].push((e.dst, e.weight));
            adj[e.dst].push((e.src, e.weight));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Dense symmetric weight matrix, zero diagonal, row-major.
    pub fn dense_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n * self.n];
        for e in &self.edges {
            w[e.src * self.n + e.dst] = e.weight as f64;
            w[e.dst * self.n + e.src] = e.weight as f64;
        }
        w
    }

    /// Relabels nodes so that new node `k` is old node `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut inverse = vec![0; self.n];
        for (k, &old) in order.iter().enumerate() {
            inverse[old] = k;
        }
        Self::from_edges(
            self.day,
            self.n,
            self.lookback,
            self.edges
                .iter()
                .map(|e| (inverse[e.src], inverse[e.dst], e.weight)),
        )
        .expect("permutation keeps indices in range")
    }
}

/// Projects the analyst-firm coverage record onto firms: the weight of
/// `(i, j)` is the number of distinct analysts with at least one estimate for
/// both firms on trading days in `(t - lookback, t]`.
///
/// `records` must be sorted by `day` (as produced by `EstimateSet`).
pub fn project_coverage(records: &[EstimateRecord], t: usize, lookback: usize, n: usize) -> CoverageGraph {
    let lookback = lookback.max(1);
    let lo = (t + 1).saturating_sub(lookback);
    let start = records.partition_point(|r| r.day < lo);
    let end = records.partition_point(|r| r.day <= t);
    let mut baskets: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for r in &records[start..end] {
        if r.firm < n {
            baskets.entry(r.analyst_id.as_str()).or_default().insert(r.firm);
        }
    }
    let mut counts: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    for basket in baskets.values() {
        let firms: Vec<usize> = basket.iter().copied().collect();
        for (a, &i) in firms.iter().enumerate() {
            for &j in &firms[a + 1..] {
                *counts.entry((i, j)).or_insert(0) += 1;
            }
        }
    }
    CoverageGraph {
        day: t,
        n,
        edges: counts
            .into_iter()
            .map(|((src, dst), weight)| Edge { src, dst, weight })
            .collect(),
        lookback,
    }
}

/// Correlation network plus the firms whose returns were constant over the
/// window (their pairs get correlation 0 and are never kept).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationGraph {
    pub graph: CoverageGraph,
    pub flat_firms: Vec<usize>,
}

/// Keeps the firm pairs whose trailing daily log-return correlation is at or
/// above the empirical `percentile` of all pair correlations.
pub fn correlation_graph(panel: &PricePanel, t: usize, window: usize, percentile: f64) -> Result<CorrelationGraph> {
    if !(percentile > 0.0 && percentile < 1.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "correlation percentile {percentile} outside (0, 1)"
        )));
    }
    if window < 2 || t < window {
        return Err(Error::InsufficientHistory { t, needed: window });
    }
    if t >= panel.n_dates() {
        return Err(Error::OutOfBounds {
            index: t,
            len: panel.n_dates(),
        });
    }
    let n = panel.n_firms();
    let returns: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (t + 1 - window..=t)
                .map(|s| ln(panel.price(s, i) / panel.price(s - 1, i)))
                .collect()
        })
        .collect();
    let flat: Vec<bool> = returns
        .iter()
        .map(|r| r.iter().all(|x| *x == r[0]))
        .collect();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let rho = if flat[i] || flat[j] {
                None
            } else {
                pearson(&returns[i], &returns[j])
            };
            pairs.push((i, j, rho));
        }
    }
    let kept = top_share(&pairs, 1.0 - percentile);
    Ok(CorrelationGraph {
        graph: CoverageGraph::from_edges(t, n, window, kept.into_iter().map(|(i, j)| (i, j, 1)))?,
        flat_firms: (0..n).filter(|&i| flat[i]).collect(),
    })
}

/// Pairs whose value is at or above the k-th largest, `k = ceil(share * M)`.
/// Pairs without a value are never kept.
fn top_share(pairs: &[(usize, usize, Option<f64>)], share: f64) -> Vec<(usize, usize)> {
    let m = pairs.len();
    if m == 0 {
        return Vec::new();
    }
    // The epsilon absorbs representation error, e.g. (1 - 0.9) * 100.
    let k = libm::ceil(share * m as f64 - 1e-9).clamp(1.0, m as f64) as usize;
    let mut values: Vec<f64> = pairs.iter().filter_map(|p| p.2).collect();
    if values.is_empty() {
        return Vec::new();
    }
    values.sort_by(|a, b| b.total_cmp(a));
    let cutoff = values[(k - 1).min(values.len() - 1)];
    pairs
        .iter()
        .filter(|p| p.2.is_some_and(|v| v >= cutoff))
        .map(|p| (p.0, p.1))
        .collect()
}

/// Union of cliques, one per industry code.
pub fn industry_graph(map: &IndustryMap, day: usize) -> CoverageGraph {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for i in 0..map.len() {
        groups.entry(map.code(i)).or_default().push(i);
    }
    let mut edges = Vec::new();
    for members in groups.values() {
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                edges.push((i, j, 1));
            }
        }
    }
    CoverageGraph::from_edges(day, map.len(), 0, edges).expect("industry indices are in range")
}

/// Keeps a uniformly random subset of exactly `round((1 - fraction) * |E|)`
/// edges, determined by `seed`.
pub fn delete_edges(g: &CoverageGraph, fraction: f64, seed: u64) -> CoverageGraph {
    let fraction = fraction.clamp(0.0, 1.0);
    let total = g.edges.len();
    let keep = round((1.0 - fraction) * total as f64) as usize;
    let mut rng = seed::rng(seed);
    let mut idx = sample(&mut rng, total, keep.min(total)).into_vec();
    idx.sort_unstable();
    CoverageGraph {
        day: g.day,
        n: g.n,
        edges: idx.into_iter().map(|k| g.edges[k]).collect(),
        lookback: g.lookback,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TopologyStats {
    pub jaccard_vs_prev: f64,
    pub diameter: f64,
    pub transitivity: f64,
}

/// Jaccard similarity against the previous snapshot (1 when absent or both
/// are edgeless), hop diameter of the largest connected component, and
/// transitivity `3 * triangles / connected triples`.
pub fn topology_stats(g: &CoverageGraph, prev: Option<&CoverageGraph>) -> TopologyStats {
    let jaccard_vs_prev = match prev {
        None => 1.0,
        Some(p) => {
            let a = g.edge_set();
            let b = p.edge_set();
            let union = a.union(&b).count();
            if union == 0 {
                1.0
            } else {
                a.intersection(&b).count() as f64 / union as f64
            }
        }
    };
    if g.edges.is_empty() {
        return TopologyStats {
            jaccard_vs_prev,
            diameter: 0.0,
            transitivity: 0.0,
        };
    }
    let adj: Vec<Vec<usize>> = g
        .adjacency_lists()
        .into_iter()
        .map(|l| l.into_iter().map(|(j, _)| j).collect())
        .collect();
    TopologyStats {
        jaccard_vs_prev,
        diameter: largest_component_diameter(&adj) as f64,
        transitivity: transitivity(&adj),
    }
}

fn bfs(adj: &[Vec<usize>], source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap_or(0);
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

fn largest_component_diameter(adj: &[Vec<usize>]) -> usize {
    let n = adj.len();
    let mut component = vec![usize::MAX; n];
    let mut best: Vec<usize> = Vec::new();
    for s in 0..n {
        if component[s] != usize::MAX {
            continue;
        }
        let members: Vec<usize> = bfs(adj, s)
            .iter()
            .enumerate()
            .filter_map(|(v, d)| d.map(|_| v))
            .collect();
        for &v in &members {
            component[v] = s;
        }
        if members.len() > best.len() {
            best = members;
        }
    }
    best.iter()
        .map(|&s| bfs(adj, s).into_iter().flatten().max().unwrap_or(0))
        .max()
        .unwrap_or(0)
}

fn transitivity(adj: &[Vec<usize>]) -> f64 {
    let mut closed = 0usize;
    let mut triples = 0usize;
    for nbrs in adj {
        let d = nbrs.len();
        triples += d * d.saturating_sub(1) / 2;
        for (a, &v) in nbrs.iter().enumerate() {
            for &w in &nbrs[a + 1..] {
                if adj[v].binary_search(&w).is_ok() {
                    closed += 1;
                }
            }
        }
    }
    // Each triangle is counted once per corner, i.e. `closed = 3 * triangles`.
    if triples == 0 {
        0.0
    } else {
        closed as f64 / triples as f64
    }
}
