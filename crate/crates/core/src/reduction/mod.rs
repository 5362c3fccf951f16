//! Network reductions: the 2-core, the kernel with series-law weights and its exact
//! coupling to the tree on the full graph, the contiguous giant-component model, and
//! the restricted-tree total-variation check.

pub mod contiguous;
pub mod tv;

pub use contiguous::{
    bernoulli_percolation, conjugate_parameter, kernel_weight_law_stats, sample_contiguous_giant,
    ContiguousGiant, ContiguousModelParams, KernelWeightReport, KernelWeightSample,
    SnapshotSchedule,
};
pub use tv::{giant_cluster, tv_restricted_laws, TvReport};

use std::collections::HashMap;
use std::path::Path;

use crate::electric::{
    edge_marginals_scaled, effective_resistance_scaled, joint_edge_probability,
};
use crate::environment::{Conductances, Environment, WeightedGraphView};
use crate::error::{Error, Result};
use crate::graph::{write_edge_list, EdgeId, MultiGraph, VertexId};
use crate::observables::tv_distance;
use crate::sampler::{enumerate_spanning_trees, exact_tree_law};

/// The 2-core of a graph with the original ids of its vertices and edges.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoCore {
    pub graph: MultiGraph,
    /// Original vertex of every core vertex (increasing).
    pub vertices: Vec<VertexId>,
    /// Original edge of every core edge.
    pub edges: Vec<EdgeId>,
}

/// Iteratively peel vertices of degree at most 1.
pub fn two_core(g: &MultiGraph) -> TwoCore {
    let n = g.n();
    let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut removed = vec![false; n];
    let mut stack: Vec<VertexId> = (0..n).filter(|&v| deg[v] <= 1).collect();
    while let Some(v) = stack.pop() {
        if removed[v] {
            continue;
        }
        removed[v] = true;
        for &(w, _) in g.neighbors(v) {
            if !removed[w] {
                deg[w] -= 1;
                if deg[w] == 1 {
                    stack.push(w);
                }
            }
        }
    }
    let vertices: Vec<VertexId> = (0..n).filter(|&v| !removed[v]).collect();
    let (graph, edges) = g.induced_subgraph(&vertices);
    TwoCore {
        graph,
        vertices,
        edges,
    }
}

/// `|E| − |V|`.
pub fn graph_excess(g: &MultiGraph) -> i64 {
    g.m() as i64 - g.n() as i64
}

/// The kernel of a graph: its 2-core without cycle components, with every maximal path
/// through degree-2 vertices contracted to one edge of series-law weight
/// `ŵ = (Σ_{e∈φ} 1/w(e))⁻¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelDecomposition {
    pub two_core: TwoCore,
    pub kernel: MultiGraph,
    /// Original vertex of every kernel vertex (increasing).
    pub kernel_vertices: Vec<VertexId>,
    /// Original edges of the path behind every kernel edge, in path order.
    pub phi: Vec<Vec<EdgeId>>,
    /// `log ŵ` per kernel edge.
    pub log_weights: Vec<f64>,
    /// Paths from a kernel vertex back to itself; they would be self-loops and are left
    /// out (no spanning tree contains a whole cycle).
    pub loops: Vec<Vec<EdgeId>>,
    /// Edges of 2-core components that are simple cycles.
    pub dropped_cycles: Vec<Vec<EdgeId>>,
    pub beta: f64,
}

impl KernelDecomposition {
    pub fn kernel_weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    pub fn conductances(&self) -> Conductances {
        Conductances::from_log_weights(&self.log_weights)
    }

    /// Environment `ω̂ = −log ŵ / β` reproducing the kernel weights (`β > 0`).
    pub fn kernel_environment(&self) -> Result<Environment> {
        if !(self.beta > 0.0) {
            return Err(Error::Unsupported(
                "kernel weights at beta = 0 are not of the form exp(-beta omega)".into(),
            ));
        }
        Ok(Environment::fixed(
            self.log_weights.iter().map(|l| -l / self.beta).collect(),
        ))
    }

    /// Write `<stem>.core`, `<stem>.kernel` (edge lists in original vertex ids for the
    /// core, kernel ids for the kernel) and `<stem>.phi` (`kernel-edge: ids`).
    pub fn write_files(&self, dir: &Path, stem: &str) -> Result<()> {
        let write = |name: String, text: String| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(path, e))
        };
        write(format!("{stem}.core"), write_edge_list(&self.two_core.graph, None))?;
        let lw: Vec<f64> = self.log_weights.clone();
        write(format!("{stem}.kernel"), write_edge_list(&self.kernel, Some(&lw)))?;
        let mut phi = String::new();
        for (k, path) in self.phi.iter().enumerate() {
            let ids: Vec<String> = path.iter().map(|e| e.to_string()).collect();
            phi.push_str(&format!("{k}: {}\n", ids.join(",")));
        }
        write(format!("{stem}.phi"), phi)
    }
}

fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + xs.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// Build the kernel of `g` with weights `w(e) = exp(−β ω_e)`.
pub fn kernel_decompose(g: &MultiGraph, env: &Environment, beta: f64) -> Result<KernelDecomposition> {
    WeightedGraphView::new(g, env, beta)?;
    let core = two_core(g);
    let h = &core.graph;
    let k_of: Vec<Option<usize>> = {
        let mut next = 0;
        (0..h.n())
            .map(|v| {
                (h.degree(v) >= 3).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    };
    let kernel_vertices: Vec<VertexId> = (0..h.n())
        .filter(|&v| k_of[v].is_some())
        .map(|v| core.vertices[v])
        .collect();
    let mut used = vec![false; h.m()];
    let mut paths: Vec<(usize, usize, Vec<EdgeId>)> = Vec::new();
    let mut loops = Vec::new();
    for x in 0..h.n() {
        let Some(kx) = k_of[x] else { continue };
        for &(y, e) in h.neighbors(x) {
            if used[e] {
                continue;
            }
            used[e] = true;
            let mut path = vec![e];
            let (mut cur, mut last) = (y, e);
            while k_of[cur].is_none() {
                let &(nxt, f) = h
                    .neighbors(cur)
                    .iter()
                    .find(|&&(_, f)| f != last)
                    .expect("2-core vertices have degree 2");
                used[f] = true;
                path.push(f);
                cur = nxt;
                last = f;
            }
            let orig: Vec<EdgeId> = path.iter().map(|&p| core.edges[p]).collect();
            let kz = k_of[cur].expect("path ends at a kernel vertex");
            if kz == kx {
                loops.push(orig);
            } else {
                paths.push((kx, kz, orig));
            }
        }
    }
    // Remaining edges lie on 2-core components without kernel vertices: simple cycles.
    let mut dropped_cycles: Vec<Vec<EdgeId>> = Vec::new();
    let mut seen = vec![false; h.n()];
    for s in 0..h.n() {
        if seen[s] || k_of[s].is_some() || h.neighbors(s).iter().any(|&(_, e)| used[e]) {
            continue;
        }
        let mut cycle = Vec::new();
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(v) = stack.pop() {
            for &(w, e) in h.neighbors(v) {
                if !used[e] {
                    used[e] = true;
                    cycle.push(core.edges[e]);
                }
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        cycle.sort_unstable();
        dropped_cycles.push(cycle);
    }
    paths.sort_by_key(|p| *p.2.iter().min().expect("nonempty path"));
    let mut kernel = MultiGraph::new(kernel_vertices.len());
    let mut phi = Vec::with_capacity(paths.len());
    let mut log_weights = Vec::with_capacity(paths.len());
    for (a, b, path) in paths {
        kernel.add_edge(a, b)?;
        log_weights.push(-log_sum_exp(path.iter().map(|&e| beta * env.value(e))));
        phi.push(path);
    }
    Ok(KernelDecomposition {
        two_core: core,
        kernel,
        kernel_vertices,
        phi,
        log_weights,
        loops,
        dropped_cycles,
        beta,
    })
}

/// Result of the kernel coupling check.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingReport {
    pub kernel_edges: usize,
    /// `max_k |P_kernel(k ∈ T) − P_G(φ(k) ⊂ T)|` from enumeration.
    pub max_marginal_diff: f64,
    /// Same comparison with Kirchhoff marginals and transfer-current determinants.
    pub max_kirchhoff_diff: f64,
    pub worst_edge: Option<usize>,
    /// TV distance between the kernel tree law and the law of `{k : φ(k) ⊂ T}`.
    pub joint_tv: f64,
}

/// Compare the tree law on the kernel with the tree law on `g` pushed through `φ`.
pub fn kernel_coupling_check(
    g: &MultiGraph,
    env: &Environment,
    beta: f64,
    cap: usize,
) -> Result<CouplingReport> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let kd = kernel_decompose(g, env, beta)?;
    let wg = WeightedGraphView::new(g, env, beta)?;
    let k = kd.kernel.m();
    if k == 0 {
        return Ok(CouplingReport {
            kernel_edges: 0,
            max_marginal_diff: 0.0,
            max_kirchhoff_diff: 0.0,
            worst_edge: None,
            joint_tv: 0.0,
        });
    }
    let law = exact_tree_law(&wg, cap)?;
    // Kernel law with weights Π ŵ.
    let ktrees = enumerate_spanning_trees(&kd.kernel, cap)?;
    let klogw: Vec<f64> = ktrees
        .iter()
        .map(|t| t.triples().iter().map(|x| kd.log_weights[x.0]).sum())
        .collect();
    let lz = log_sum_exp(klogw.iter().copied());
    let kprob: Vec<f64> = klogw.iter().map(|l| (l - lz).exp()).collect();
    let mut kmarg = vec![0.0; k];
    for (t, p) in ktrees.iter().zip(&kprob) {
        for x in t.triples() {
            kmarg[x.0] += p;
        }
    }
    let kc = kd.conductances();
    let kirch = edge_marginals_scaled(&kd.kernel, &kc.scaled)?;
    let (mut max_marginal_diff, mut max_kirchhoff_diff) = (0.0f64, 0.0f64);
    let mut worst_edge = None;
    let mut worst = -1.0;
    for (e, path) in kd.phi.iter().enumerate() {
        let pg = law.joint(path);
        let d = (pg - kmarg[e]).abs();
        max_marginal_diff = max_marginal_diff.max(d);
        let pj = joint_edge_probability(&wg, path)?;
        let dk = (pj - kirch[e]).abs();
        max_kirchhoff_diff = max_kirchhoff_diff.max(dk);
        if d.max(dk) > worst {
            worst = d.max(dk);
            worst_edge = Some(e);
        }
    }
    // Joint law of the set of complete paths.
    let mut pushed: HashMap<Vec<usize>, f64> = HashMap::new();
    for (t, p) in law.trees.iter().zip(&law.probability) {
        let set: Vec<usize> = (0..k)
            .filter(|&e| kd.phi[e].iter().all(|&f| t.contains(f)))
            .collect();
        *pushed.entry(set).or_insert(0.0) += p;
    }
    let a: Vec<(Vec<usize>, f64)> = pushed.into_iter().collect();
    let b: Vec<(Vec<usize>, f64)> = ktrees
        .iter()
        .zip(&kprob)
        .map(|(t, &p)| (t.edge_ids(), p))
        .collect();
    let joint_tv = tv_distance(&a, &b)?;
    let report = CouplingReport {
        kernel_edges: k,
        max_marginal_diff,
        max_kirchhoff_diff,
        worst_edge,
        joint_tv,
    };
    if max_marginal_diff.max(max_kirchhoff_diff).max(joint_tv) > 1e-9 {
        return Err(Error::CheckFailed(format!(
            "kernel coupling mismatch at kernel edge {worst_edge:?}: {report:?}"
        )));
    }
    Ok(report)
}

/// Largest relative difference of effective resistances between kernel vertices in
/// the 2-core with weights `w` and in the kernel with weights `ŵ` (at most `pairs`
/// vertex pairs, in lexicographic order).
pub fn series_law_check(g: &MultiGraph, env: &Environment, beta: f64, pairs: usize) -> Result<f64> {
    let kd = kernel_decompose(g, env, beta)?;
    let wg = WeightedGraphView::new(g, env, beta)?;
    let c = wg.conductances();
    let core = &kd.two_core;
    let core_c: Vec<f64> = core.edges.iter().map(|&e| c.scaled[e]).collect();
    let kern_c: Vec<f64> = kd.log_weights.iter().map(|l| (l - c.log_scale).exp()).collect();
    let local: HashMap<VertexId, usize> =
        core.vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let kv = &kd.kernel_vertices;
    let mut worst: f64 = 0.0;
    let mut done = 0;
    'outer: for i in 0..kv.len() {
        for j in i + 1..kv.len() {
            if done == pairs {
                break 'outer;
            }
            done += 1;
            let r_core =
                effective_resistance_scaled(&core.graph, &core_c, &[local[&kv[i]]], &[local[&kv[j]]])?;
            let r_kern = effective_resistance_scaled(&kd.kernel, &kern_c, &[i], &[j])?;
            worst = worst.max(((r_core - r_kern) / r_core).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_complete, build_cycle, build_path};

    fn theta() -> MultiGraph {
        // Two hubs 0 and 1 joined by three paths of length 2 through 2, 3, 4.
        MultiGraph::from_edges(5, &[(0, 2), (1, 2), (0, 3), (1, 3), (0, 4), (1, 4)]).unwrap()
    }

    #[test]
    fn two_core_examples() {
        assert_eq!(two_core(&build_path(5).unwrap()).graph.n(), 0);
        let lolly = MultiGraph::from_edges(4, &[(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap();
        let c = two_core(&lolly);
        assert_eq!(c.vertices, vec![0, 1, 2]);
        assert_eq!(c.edges, vec![0, 1, 2]);
        let t = theta();
        assert_eq!(two_core(&t).graph, t);
        assert_eq!(graph_excess(&build_path(4).unwrap()), -1);
        assert_eq!(graph_excess(&build_cycle(4).unwrap()), 0);
        assert_eq!(graph_excess(&theta()), 1);
    }

    #[test]
    fn theta_kernel() {
        let g = theta();
        let env = Environment::fixed(vec![0.0; 6]);
        let kd = kernel_decompose(&g, &env, 1.0).unwrap();
        assert_eq!(kd.kernel.n(), 2);
        assert_eq!(kd.kernel.m(), 3);
        assert_eq!(kd.kernel_vertices, vec![0, 1]);
        for w in kd.kernel_weights() {
            assert!((w - 0.5).abs() < 1e-15);
        }
        assert_eq!(kd.phi, vec![vec![0, 1], vec![2, 3], vec![4, 5]]);
        let r = kernel_coupling_check(&g, &env, 1.0, 1000).unwrap();
        assert!(r.max_marginal_diff < 1e-12);
    }

    #[test]
    fn cycle_components_are_dropped() {
        let g = build_cycle(5).unwrap();
        let env = Environment::fixed(vec![0.0; 5]);
        let kd = kernel_decompose(&g, &env, 1.0).unwrap();
        assert_eq!(kd.kernel.n(), 0);
        assert_eq!(kd.dropped_cycles, vec![vec![0, 1, 2, 3, 4]]);
    }

    #[test]
    fn min_degree_three_graph_is_its_own_kernel() {
        let g = build_complete(5).unwrap();
        let env = Environment::fixed((0..10).map(|e| e as f64 / 10.0).collect());
        let kd = kernel_decompose(&g, &env, 2.0).unwrap();
        assert_eq!(kd.kernel, g);
        assert_eq!(kd.phi, (0..10).map(|e| vec![e]).collect::<Vec<_>>());
        for (e, l) in kd.log_weights.iter().enumerate() {
            assert!((l + 2.0 * env.value(e)).abs() < 1e-12);
        }
    }

    #[test]
    fn coupling_and_series_law_on_subdivided_k4_with_pendants() {
        // K4 with two edges subdivided, a pendant path and a loop path at vertex 0.
        let edges = [
            (0, 1), (0, 4), (2, 4), (0, 3), (1, 2), (1, 5), (3, 5), (2, 3),
            (3, 6), (6, 7), (0, 8), (8, 9), (0, 9),
        ];
        let g = MultiGraph::from_edges(10, &edges).unwrap();
        let omega: Vec<f64> = (0..g.m()).map(|e| ((e * 5 + 1) % 7) as f64 / 7.0).collect();
        let env = Environment::fixed(omega);
        let kd = kernel_decompose(&g, &env, 1.5).unwrap();
        assert_eq!(kd.kernel_vertices, vec![0, 1, 2, 3]);
        assert_eq!(kd.loops.len(), 1);
        assert_eq!(kd.kernel.m(), 6);
        let r = kernel_coupling_check(&g, &env, 1.5, 100_000).unwrap();
        assert!(r.joint_tv < 1e-9);
        assert!(series_law_check(&g, &env, 1.5, 100).unwrap() < 1e-9);
        // Idempotence.
        let kenv = kd.kernel_environment().unwrap();
        let again = kernel_decompose(&kd.kernel, &kenv, 1.5).unwrap();
        assert_eq!(again.kernel, kd.kernel);
    }
}
