//! Minimum spanning trees of the environment (the `β → ∞` limit of the Gibbs law).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::environment::{CompleteEnvironment, Environment};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, MultiGraph, SpanningTree, UnionFind, VertexId};

/// Output of an MST computation.
#[derive(Clone, Debug, PartialEq)]
pub struct MstResult {
    /// Chosen edges, sorted by id.
    pub edges: Vec<EdgeId>,
    /// Some ω values were tied and broken by edge id.
    pub ties_perturbed: bool,
    /// The graph is disconnected and `edges` is a minimum spanning forest.
    pub forest: bool,
    pub n: usize,
}

impl MstResult {
    /// The spanning tree, when the graph is connected.
    pub fn tree(&self, g: &MultiGraph) -> Result<SpanningTree> {
        if self.forest {
            return Err(Error::Disconnected);
        }
        SpanningTree::from_edge_ids(g, &self.edges)
    }

    /// Hamiltonian `Σ_{e∈T} ω_e` of the tree.
    pub fn hamiltonian(&self, env: &Environment) -> f64 {
        env.hamiltonian(self.edges.iter().copied())
    }
}

fn check_env(g: &MultiGraph, env: &Environment) -> Result<()> {
    if env.len() != g.m() {
        return Err(Error::invalid(format!(
            "environment has {} values for {} edges",
            env.len(),
            g.m()
        )));
    }
    if env.omega().iter().any(|w| w.is_nan()) {
        return Err(Error::invalid("environment contains NaN"));
    }
    Ok(())
}

#[inline]
fn edge_order(env: &Environment, a: EdgeId, b: EdgeId) -> Ordering {
    env.value(a).total_cmp(&env.value(b)).then(a.cmp(&b))
}

fn has_ties(env: &Environment) -> bool {
    let mut xs = env.omega().to_vec();
    xs.sort_by(f64::total_cmp);
    xs.windows(2).any(|w| w[0] == w[1])
}

/// Kruskal: scan edges by increasing `(ω, id)` and keep those joining two components.
pub fn kruskal_mst(g: &MultiGraph, env: &Environment) -> Result<MstResult> {
    check_env(g, env)?;
    let mut order: Vec<EdgeId> = (0..g.m()).collect();
    order.sort_by(|&a, &b| edge_order(env, a, b));
    let mut uf = UnionFind::new(g.n());
    let mut edges = Vec::with_capacity(g.n().saturating_sub(1));
    for e in order {
        let (u, v) = g.endpoints(e);
        if uf.union(u, v) {
            edges.push(e);
            if edges.len() + 1 == g.n() {
                break;
            }
        }
    }
    edges.sort_unstable();
    Ok(MstResult {
        forest: edges.len() + 1 < g.n().max(1),
        ties_perturbed: has_ties(env),
        edges,
        n: g.n(),
    })
}

#[derive(PartialEq)]
struct HeapItem {
    omega: f64,
    edge: EdgeId,
    to: VertexId,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap.
        other
            .omega
            .total_cmp(&self.omega)
            .then(other.edge.cmp(&self.edge))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Prim: grow from `start`, always adding the lowest `(ω, id)` outgoing edge. Other
/// components are grown in turn from their lowest vertex, giving a forest.
pub fn prim_mst(g: &MultiGraph, env: &Environment, start: VertexId) -> Result<MstResult> {
    check_env(g, env)?;
    let n = g.n();
    if start >= n {
        return Err(Error::invalid(format!("start {start} out of range")));
    }
    let mut in_tree = vec![false; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut components = 0;
    let roots = std::iter::once(start).chain(0..n);
    for root in roots {
        if in_tree[root] {
            continue;
        }
        components += 1;
        in_tree[root] = true;
        let mut heap = BinaryHeap::new();
        let push_all = |heap: &mut BinaryHeap<HeapItem>, u: VertexId, in_tree: &[bool]| {
            for &(w, e) in g.neighbors(u) {
                if !in_tree[w] {
                    heap.push(HeapItem {
                        omega: env.value(e),
                        edge: e,
                        to: w,
                    });
                }
            }
        };
        push_all(&mut heap, root, &in_tree);
        while let Some(item) = heap.pop() {
            if in_tree[item.to] {
                continue;
            }
            in_tree[item.to] = true;
            edges.push(item.edge);
            push_all(&mut heap, item.to, &in_tree);
        }
    }
    edges.sort_unstable();
    Ok(MstResult {
        forest: components > 1,
        ties_perturbed: has_ties(env),
        edges,
        n,
    })
}

/// MST of `K_n` with an implicit environment: Kruskal on the edges below a threshold,
/// doubling the quantile until the retained edges connect the graph.
pub fn complete_mst(kn: &CompleteEnvironment) -> Result<SpanningTree> {
    let n = kn.n();
    if n == 1 {
        return SpanningTree::from_triples(1, Vec::new());
    }
    let m = kn.m() as f64;
    let mut q = (4.0 * (n as f64).ln().max(1.0) / n as f64).min(1.0);
    loop {
        let threshold = if q >= 1.0 {
            f64::INFINITY
        } else {
            kn.law().inverse_cdf(q)?
        };
        let cand = kn.edges_below(threshold);
        let mut uf = UnionFind::new(n);
        let mut triples = Vec::with_capacity(n - 1);
        for &(_, e, u, v) in &cand {
            if uf.union(u, v) {
                triples.push((e, u, v));
                if triples.len() + 1 == n {
                    return Ok(SpanningTree::from_triples_unchecked(n, triples));
                }
            }
        }
        if q >= 1.0 || cand.len() as f64 >= m {
            return Err(Error::NumericalFailure(
                "threshold filter failed to connect K_n".into(),
            ));
        }
        q = (2.0 * q).min(1.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{sample_environment, DisorderLaw};
    use crate::graph::{build_complete, build_path, build_star};

    #[test]
    fn mst_of_path_and_star() {
        let g = build_path(5).unwrap();
        let env = Environment::fixed(vec![0.3, 0.1, 0.4, 0.2]);
        assert_eq!(kruskal_mst(&g, &env).unwrap().edges, vec![0, 1, 2, 3]);
        let g = build_star(4).unwrap();
        let env = Environment::fixed(vec![0.3, 0.1, 0.4, 0.2]);
        assert_eq!(prim_mst(&g, &env, 2).unwrap().edges, vec![0, 1, 2, 3]);
    }

    #[test]
    fn ties_are_flagged() {
        let g = build_complete(3).unwrap();
        let r = kruskal_mst(&g, &Environment::fixed(vec![1.0, 1.0, 1.0])).unwrap();
        assert!(r.ties_perturbed);
        assert_eq!(r.edges, vec![0, 1]);
    }

    #[test]
    fn forest_is_flagged() {
        let g = MultiGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let env = Environment::fixed(vec![0.5, 0.7]);
        let r = kruskal_mst(&g, &env).unwrap();
        assert!(r.forest);
        assert_eq!(r.edges, vec![0, 1]);
        let p = prim_mst(&g, &env, 3).unwrap();
        assert!(p.forest);
        assert_eq!(p.edges, vec![0, 1]);
        assert!(r.tree(&g).is_err());
    }

    #[test]
    fn complete_mst_matches_materialised_kruskal() {
        for seed in 0..5 {
            let kn = CompleteEnvironment::new(40, DisorderLaw::Uniform01, seed).unwrap();
            let (g, env) = kn.materialize().unwrap();
            let k = kruskal_mst(&g, &env).unwrap();
            assert_eq!(complete_mst(&kn).unwrap().edge_ids(), k.edges);
            let env2 = sample_environment(&DisorderLaw::Uniform01, &g, seed).unwrap();
            assert_eq!(env2, env);
        }
    }
}
