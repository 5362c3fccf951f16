//! Total variation between the restricted-tree laws on a graph and on its giant open
//! cluster.

use crate::environment::{open_subgraph, DisorderLaw, Environment, WeightedGraphView};
use crate::error::{Error, Result};
use crate::graph::{connected_components, EdgeId, MultiGraph, VertexId};
use crate::observables::tv_distance;
use crate::graph::restricted_subtree;
use crate::sampler::exact_tree_law;

/// The largest `p`-open cluster: its vertices (original ids, increasing) and its open
/// edges (original ids).
pub fn giant_cluster(
    g: &MultiGraph,
    env: &Environment,
    law: &DisorderLaw,
    p: f64,
) -> Result<(Vec<VertexId>, Vec<EdgeId>)> {
    let (open, ids) = open_subgraph(g, env, law, p)?;
    let census = connected_components(&open);
    let vertices = census.members(0);
    let edges = ids
        .iter()
        .enumerate()
        .filter(|&(local, _)| census.component[open.endpoints(local).0] == 0)
        .map(|(_, &e)| e)
        .collect();
    Ok((vertices, edges))
}

/// Exact TV distance and its bound `n⁴ e^{−β(p₁−p₀)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TvReport {
    pub tv: f64,
    pub bound: f64,
    pub n: usize,
    pub c0_vertices: Vec<VertexId>,
    pub c1_vertices: Vec<VertexId>,
}

/// Laws of the minimal subtree spanning `𝒞₁(p₀)`, under the tree measure on `g` and
/// under the tree measure on `𝒞₁(p₁)` with its `p₁`-open edges.
pub fn tv_restricted_laws(
    g: &MultiGraph,
    env: &Environment,
    law: &DisorderLaw,
    beta: f64,
    p0: f64,
    p1: f64,
    cap: usize,
) -> Result<TvReport> {
    if p0 > p1 {
        return Err(Error::PreconditionFailed(format!("p0 = {p0} exceeds p1 = {p1}")));
    }
    let (c0, _) = giant_cluster(g, env, law, p0)?;
    let (c1, c1_edges) = giant_cluster(g, env, law, p1)?;
    if !c0.iter().all(|v| c1.binary_search(v).is_ok()) {
        return Err(Error::PreconditionFailed(
            "the p0 giant is not contained in the p1 giant".into(),
        ));
    }
    let wg = WeightedGraphView::new(g, env, beta)?;
    let full = exact_tree_law(&wg, cap)?;
    let mut a: Vec<(Vec<EdgeId>, f64)> = Vec::new();
    for (t, &p) in full.trees.iter().zip(&full.probability) {
        a.push((restricted_subtree(t, &c0)?.edges, p));
    }
    // The cluster graph H: local vertex ids follow `c1`.
    let local = |v: VertexId| c1.binary_search(&v).expect("cluster vertex");
    let h_edges: Vec<(usize, usize)> = c1_edges
        .iter()
        .map(|&e| {
            let (u, v) = g.endpoints(e);
            (local(u), local(v))
        })
        .collect();
    let h = MultiGraph::from_edges(c1.len(), &h_edges)?;
    let h_env = env.select(&c1_edges);
    let h_law = exact_tree_law(&WeightedGraphView::new(&h, &h_env, beta)?, cap)?;
    let c0_local: Vec<usize> = c0.iter().map(|&v| local(v)).collect();
    let mut b: Vec<(Vec<EdgeId>, f64)> = Vec::new();
    for (t, &p) in h_law.trees.iter().zip(&h_law.probability) {
        let mut edges: Vec<EdgeId> = restricted_subtree(t, &c0_local)?
            .edges
            .iter()
            .map(|&e| c1_edges[e])
            .collect();
        edges.sort_unstable();
        b.push((edges, p));
    }
    let merge = |xs: Vec<(Vec<EdgeId>, f64)>| {
        let mut map = std::collections::BTreeMap::new();
        for (k, p) in xs {
            *map.entry(k).or_insert(0.0) += p;
        }
        map.into_iter().collect::<Vec<_>>()
    };
    let tv = tv_distance(&merge(a), &merge(b))?;
    let n = g.n();
    Ok(TvReport {
        tv,
        bound: (n as f64).powi(4) * (-beta * (p1 - p0)).exp(),
        n,
        c0_vertices: c0,
        c1_vertices: c1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::sample_environment;
    use crate::graph::build_complete;

    #[test]
    fn tv_vanishes_with_a_large_gap() {
        let g = build_complete(6).unwrap();
        let law = DisorderLaw::Uniform01;
        let env = sample_environment(&law, &g, 3).unwrap();
        let r = tv_restricted_laws(&g, &env, &law, 400.0, 0.3, 0.6, 10_000).unwrap();
        assert!(r.tv <= 1e-6);
        assert!(r.tv <= r.bound);
        let same = tv_restricted_laws(&g, &env, &law, 1.0, 0.4, 0.4, 10_000).unwrap();
        assert!((same.bound - 6f64.powi(4)).abs() < 1e-9);
        assert!((0.0..=1.0).contains(&same.tv));
    }

    #[test]
    fn reversed_thresholds_are_rejected() {
        let g = build_complete(4).unwrap();
        let env = Environment::fixed(vec![0.5; 6]);
        assert!(tv_restricted_laws(&g, &env, &DisorderLaw::Uniform01, 1.0, 0.6, 0.3, 100).is_err());
    }
}
