//! Exact small-graph oracles: spanning-tree enumeration, the matrix-tree partition
//! function and the full Gibbs law.

use crate::electric::reduced_laplacian_log_det;
use crate::environment::WeightedGraphView;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, MultiGraph, SpanningTree, UnionFind};

/// Default enumeration cap.
pub const ENUMERATION_CAP: usize = 1_000_000;

/// Number of spanning trees by the matrix-tree theorem (0 if disconnected). Exact for
/// counts below 2^53.
pub fn spanning_tree_count(g: &MultiGraph) -> f64 {
    if !g.is_connected() {
        return 0.0;
    }
    match reduced_laplacian_log_det(g, &vec![1.0; g.m()]) {
        Ok(l) => l.exp().round(),
        Err(_) => 0.0,
    }
}

/// Union–find with rollback (union by size, no path compression).
struct RollbackDsu {
    parent: Vec<usize>,
    size: Vec<usize>,
    history: Vec<(usize, usize)>,
}

impl RollbackDsu {
    fn new(n: usize) -> Self {
        RollbackDsu {
            parent: (0..n).collect(),
            size: vec![1; n],
            history: Vec::new(),
        }
    }

    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        self.history.push((a, b));
        true
    }

    fn rollback(&mut self) {
        let (a, b) = self.history.pop().expect("rollback without union");
        self.parent[b] = b;
        self.size[a] -= self.size[b];
    }
}

struct Enumerator<'a> {
    g: &'a MultiGraph,
    dsu: RollbackDsu,
    chosen: Vec<EdgeId>,
    out: Vec<SpanningTree>,
}

impl Enumerator<'_> {
    /// Can the current partial forest still be completed with edges `i..`?
    fn completable(&self, i: usize) -> bool {
        let n = self.g.n();
        let mut uf = UnionFind::new(n);
        let mut joins = 0;
        for v in 0..n {
            let r = self.dsu.find(v);
            if r != v && uf.union(v, r) {
                joins += 1;
            }
        }
        for &(u, v) in &self.g.edges()[i..] {
            if uf.union(u, v) {
                joins += 1;
            }
        }
        joins + 1 == n
    }

    fn recurse(&mut self, i: usize) {
        let n = self.g.n();
        if self.chosen.len() + 1 == n {
            let triples = self
                .chosen
                .iter()
                .map(|&e| {
                    let (u, v) = self.g.endpoints(e);
                    (e, u, v)
                })
                .collect();
            self.out.push(SpanningTree::from_triples_unchecked(n, triples));
            return;
        }
        if i == self.g.m() || !self.completable(i) {
            return;
        }
        // Edge i in (contraction) ...
        let (u, v) = self.g.endpoints(i);
        if self.dsu.union(u, v) {
            self.chosen.push(i);
            self.recurse(i + 1);
            self.chosen.pop();
            self.dsu.rollback();
        }
        // ... then edge i out (deletion).
        self.recurse(i + 1);
    }
}

/// Every spanning tree exactly once, in the deterministic order of the include/exclude
/// recursion on the lowest-id undecided edge.
pub fn enumerate_spanning_trees(g: &MultiGraph, cap: usize) -> Result<Vec<SpanningTree>> {
    let count = spanning_tree_count(g);
    if count > cap as f64 {
        return Err(Error::TooLarge(format!(
            "{count} spanning trees exceed the enumeration cap {cap}"
        )));
    }
    if g.n() == 0 || count == 0.0 {
        return Ok(Vec::new());
    }
    let mut en = Enumerator {
        g,
        dsu: RollbackDsu::new(g.n()),
        chosen: Vec::new(),
        out: Vec::with_capacity(count as usize),
    };
    en.recurse(0);
    Ok(en.out)
}

/// `log Z` for `Z = Σ_T Π_{e∈T} w(e)`, as a cofactor of the weighted Laplacian.
pub fn matrix_tree_partition_function(wg: &WeightedGraphView) -> Result<f64> {
    let c = wg.conductances();
    let n = wg.graph.n();
    let logdet = reduced_laplacian_log_det(wg.graph, &c.scaled)?;
    Ok(logdet + (n.saturating_sub(1)) as f64 * c.log_scale)
}

/// The exact Gibbs law `P(T) = exp(-β H(T, ω)) / Z` over all spanning trees.
#[derive(Clone, Debug)]
pub struct TreeLaw {
    pub trees: Vec<SpanningTree>,
    pub hamiltonian: Vec<f64>,
    pub probability: Vec<f64>,
    pub log_z: f64,
    pub beta: f64,
    m: usize,
}

impl TreeLaw {
    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Index of a tree in the law, if present.
    pub fn index_of(&self, t: &SpanningTree) -> Option<usize> {
        self.trees.iter().position(|s| s == t)
    }

    /// `P(e ∈ T)` for every edge.
    pub fn edge_marginals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (t, &p) in self.trees.iter().zip(&self.probability) {
            for &(e, _, _) in t.triples() {
                out[e] += p;
            }
        }
        out
    }

    /// `P(edges ⊆ T)`.
    pub fn joint(&self, edges: &[EdgeId]) -> f64 {
        self.probability_of(|t| edges.iter().all(|&e| t.contains(e)))
    }

    pub fn probability_of(&self, mut pred: impl FnMut(&SpanningTree) -> bool) -> f64 {
        self.trees
            .iter()
            .zip(&self.probability)
            .filter(|(t, _)| pred(t))
            .map(|(_, &p)| p)
            .sum()
    }

    /// `E[f(T)]`.
    pub fn expectation(&self, mut f: impl FnMut(&SpanningTree) -> f64) -> f64 {
        self.trees
            .iter()
            .zip(&self.probability)
            .map(|(t, &p)| p * f(t))
            .sum()
    }

    /// `E[H(T, ω)]`.
    pub fn expected_hamiltonian(&self) -> f64 {
        self.hamiltonian
            .iter()
            .zip(&self.probability)
            .map(|(h, p)| h * p)
            .sum()
    }

    /// Index of the most likely tree (the MST as `β → ∞`).
    pub fn mode(&self) -> usize {
        (0..self.len())
            .min_by(|&a, &b| self.hamiltonian[a].total_cmp(&self.hamiltonian[b]))
            .unwrap_or(0)
    }
}

/// Enumerate all spanning trees and normalise their Gibbs weights.
pub fn exact_tree_law(wg: &WeightedGraphView, cap: usize) -> Result<TreeLaw> {
    let g = wg.graph;
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let trees = enumerate_spanning_trees(g, cap)?;
    let hamiltonian: Vec<f64> = trees
        .iter()
        .map(|t| wg.env.hamiltonian(t.triples().iter().map(|x| x.0)))
        .collect();
    let logw: Vec<f64> = hamiltonian.iter().map(|h| -wg.beta * h).collect();
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logw.iter().map(|l| (l - top).exp()).sum();
    let log_z = top + sum.ln();
    let probability = logw.iter().map(|l| (l - log_z).exp()).collect();
    Ok(TreeLaw {
        trees,
        hamiltonian,
        probability,
        log_z,
        beta: wg.beta,
        m: g.m(),
    })
}

/// Serialise a tree as one line of space-separated edge ids.
pub fn format_tree_line(t: &SpanningTree) -> String {
    t.edge_ids()
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parse a line written by [`format_tree_line`].
pub fn parse_tree_line(g: &MultiGraph, line: &str) -> Result<SpanningTree> {
    let ids = line
        .split_whitespace()
        .map(|s| {
            s.parse::<EdgeId>()
                .map_err(|_| Error::invalid(format!("bad edge id {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    SpanningTree::from_edge_ids(g, &ids)
}
