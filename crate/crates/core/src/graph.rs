//! Undirected graphs keyed by opaque byte-string node identifiers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Opaque node identifier shared by both parties.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(Vec<u8>);

impl NodeId {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Self {
        NodeId(bytes.into())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl AsRef<[u8]> for NodeId {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.as_bytes().to_vec())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s.into_bytes())
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&String::from_utf8_lossy(&self.0))
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", String::from_utf8_lossy(&self.0))
    }
}

pub type NeighbourSet = BTreeSet<NodeId>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: expected `u v`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: self-loop on {node}")]
    SelfLoop { line: usize, node: String },
    #[error("invalid Barabási–Albert configuration: n={n}, k={k} (need 1 <= k < n)")]
    BadConfig { n: usize, k: usize },
    #[error("k-sweep requires 1 <= k <= n - 2, got k={k} for n={n}")]
    BadSweep { n: usize, k: usize },
}

/// Simple undirected graph. Adjacency is kept symmetric and loop-free.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Graph {
    adjacency: BTreeMap<NodeId, NeighbourSet>,
}

static EMPTY: NeighbourSet = BTreeSet::new();

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, v: NodeId) {
        self.adjacency.entry(v).or_default();
    }

    /// Inserts `u–v`; returns false for self-loops and existing edges.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> bool {
        if u == v {
            return false;
        }
        let fresh = self.adjacency.entry(u.clone()).or_default().insert(v.clone());
        self.adjacency.entry(v).or_default().insert(u);
        fresh
    }

    pub fn has_edge(&self, u: &NodeId, v: &NodeId) -> bool {
        self.adjacency.get(u).is_some_and(|n| n.contains(v))
    }

    /// Neighbours of `v`; unknown nodes have none.
    pub fn neighbours(&self, v: &NodeId) -> &NeighbourSet {
        self.adjacency.get(v).unwrap_or(&EMPTY)
    }

    pub fn degree(&self, v: &NodeId) -> usize {
        self.neighbours(v).len()
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.adjacency.keys()
    }

    /// Each edge once, as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (&NodeId, &NodeId)> {
        self.adjacency
            .iter()
            .flat_map(|(u, ns)| ns.range(u..).map(move |v| (u, v)))
    }

    pub fn is_symmetric(&self) -> bool {
        self.adjacency.iter().all(|(u, ns)| {
            !ns.contains(u) && ns.iter().all(|v| self.neighbours(v).contains(u))
        })
    }

    /// Serializes as one `u v` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

/// Parses an edge list: one `u v` pair per line, `#` comments, blank lines
/// ignored. Duplicate edges collapse.
pub fn load_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut g = Graph::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut parts = content.split_whitespace();
        let (Some(u), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(GraphError::Malformed { line, text: raw.to_string() });
        };
        if u == v {
            return Err(GraphError::SelfLoop { line, node: u.to_string() });
        }
        g.add_edge(NodeId::from(u), NodeId::from(v));
    }
    Ok(g)
}

/// Barabási–Albert growth parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaConfig {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
}

impl BaConfig {
    pub fn new(n: usize, k: usize, seed: u64) -> Result<Self, GraphError> {
        if k == 0 || k >= n {
            return Err(GraphError::BadConfig { n, k });
        }
        Ok(BaConfig { n, k, seed })
    }
}

fn ba_node(i: usize) -> NodeId {
    NodeId(i.to_string().into_bytes())
}

/// Preferential-attachment graph on nodes `"0".."n-1"` in arrival order.
///
/// Starts from a clique on the first `k` nodes; every later node links to `k`
/// distinct existing nodes drawn proportionally to their degree at the start
/// of its step.
pub fn ba_generate(cfg: &BaConfig) -> Result<Graph, GraphError> {
    let BaConfig { n, k, seed } = BaConfig::new(cfg.n, cfg.k, cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    // One entry per edge endpoint: sampling from it is degree-proportional.
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * (k * k + n * k));
    for u in 0..k {
        for v in u + 1..k {
            adj[u].insert(v);
            adj[v].insert(u);
            endpoints.extend([u, v]);
        }
    }
    let mut targets = BTreeSet::new();
    for v in k..n {
        targets.clear();
        while targets.len() < k {
            let t = if endpoints.is_empty() {
                // k = 1: the seed is a lone node with degree zero.
                rng.gen_range(0..v)
            } else {
                *endpoints.choose(&mut rng).expect("non-empty")
            };
            targets.insert(t);
        }
        for &t in &targets {
            adj[v].insert(t);
            adj[t].insert(v);
            endpoints.extend([v, t]);
        }
    }
    let mut g = Graph::new();
    for (u, ns) in adj.iter().enumerate() {
        g.adjacency.insert(ba_node(u), ns.iter().map(|&v| ba_node(v)).collect());
    }
    Ok(g)
}

/// Union of edge sets over the union of node sets.
pub fn union_graph(a: &Graph, b: &Graph) -> Graph {
    let mut out = a.clone();
    for (v, ns) in &b.adjacency {
        out.adjacency.entry(v.clone()).or_default().extend(ns.iter().cloned());
    }
    out
}

/// Mean of `|Γ(u) ∩ Γ(v) \ {u, v}|` over all unordered node pairs.
///
/// Every common neighbour `w` of a pair is a length-two path `u–w–v`, so the
/// total equals `Σ_w C(deg(w), 2)`.
pub fn avg_common_neighbours(g: &Graph) -> f64 {
    let n = g.node_count() as u128;
    if n < 2 {
        return 0.0;
    }
    let paths: u128 = g
        .adjacency
        .values()
        .map(|ns| {
            let d = ns.len() as u128;
            d * d.saturating_sub(1) / 2
        })
        .sum();
    paths as f64 / (n * (n - 1) / 2) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KSweepRow {
    pub k: usize,
    pub avg_union: f64,
    pub avg_graph2: f64,
}

impl KSweepRow {
    pub fn gain(&self) -> f64 {
        self.avg_union - self.avg_graph2
    }

    pub fn ratio(&self) -> f64 {
        self.avg_union / self.avg_graph2
    }
}

/// For each `k`, averages over `seeds` the common-neighbour means of a fresh
/// BA(n, k) "Graph 2" and of its union with a BA(n, k1) "Graph 1".
pub fn k_sweep_experiment(
    n: usize,
    k1: usize,
    k_values: &[usize],
    seeds: &[u64],
) -> Result<Vec<KSweepRow>, GraphError> {
    for &k in k_values.iter().chain(std::iter::once(&k1)) {
        if k == 0 || k + 2 > n {
            return Err(GraphError::BadSweep { n, k });
        }
    }
    let graph1: Vec<Graph> = seeds
        .iter()
        .map(|&s| ba_generate(&BaConfig::new(n, k1, derive_seed(s, 1, k1))?))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let (mut union_sum, mut g2_sum) = (0.0, 0.0);
        for (&s, g1) in seeds.iter().zip(&graph1) {
            let g2 = ba_generate(&BaConfig::new(n, k, derive_seed(s, 2, k))?)?;
            union_sum += avg_common_neighbours(&union_graph(g1, &g2));
            g2_sum += avg_common_neighbours(&g2);
        }
        let m = seeds.len().max(1) as f64;
        rows.push(KSweepRow { k, avg_union: union_sum / m, avg_graph2: g2_sum / m });
    }
    Ok(rows)
}

/// Mixes an experiment seed with a role and `k` (splitmix64 finalizer).
pub fn derive_seed(seed: u64, role: u64, k: usize) -> u64 {
    let mut z = seed
        .wrapping_add(role.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add((k as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
