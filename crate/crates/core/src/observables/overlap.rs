//! Edge and tree overlaps of two independent trees, and tree length.

use rayon::prelude::*;

use super::Estimate;
use crate::electric::edge_marginals;
use crate::environment::{Environment, WeightedGraphView};
use crate::error::{Error, Result};
use crate::graph::SpanningTree;
use crate::rng::RngStream;
use crate::sampler::{exact_tree_law, sample_tree, SamplerKind};

/// Edge overlap `O(β)` and tree overlap `g(β)` at one inverse temperature.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapReport {
    pub beta: f64,
    pub exact: bool,
    pub edge_overlap: Estimate,
    /// `None` when the exact path is requested but enumeration is infeasible.
    pub tree_overlap: Option<Estimate>,
    /// Number of sampled trees (0 for exact values).
    pub replicas: usize,
}

/// `O(β) = Σ_e P(e ∈ T)²` with Kirchhoff marginals.
pub fn edge_overlap_exact(wg: &WeightedGraphView) -> Result<f64> {
    Ok(edge_marginals(wg)?.iter().map(|p| p * p).sum())
}

/// `g(β) = Σ_T P(T)²` by enumeration.
pub fn tree_overlap_exact(wg: &WeightedGraphView, cap: usize) -> Result<f64> {
    let law = exact_tree_law(wg, cap)?;
    Ok(law.probability.iter().map(|p| p * p).sum())
}

/// Monte Carlo edge and tree overlaps from `replicas` trees paired as `(2i, 2i+1)`;
/// tree `j` uses `stream.substream("tree", j)`.
pub fn edge_overlap_mc(
    wg: &WeightedGraphView,
    replicas: usize,
    kind: SamplerKind,
    stream: &RngStream,
) -> Result<(Estimate, Estimate)> {
    if replicas < 2 {
        return Err(Error::invalid("overlap estimation needs at least 2 replicas"));
    }
    let pairs: Vec<(f64, f64)> = (0..replicas / 2)
        .into_par_iter()
        .map(|i| {
            let mut r1 = stream.substream("tree", 2 * i as u64);
            let mut r2 = stream.substream("tree", 2 * i as u64 + 1);
            let t1 = sample_tree(wg, kind, &mut r1)?;
            let t2 = sample_tree(wg, kind, &mut r2)?;
            Ok((t1.overlap(&t2) as f64, if t1 == t2 { 1.0 } else { 0.0 }))
        })
        .collect::<Result<_>>()?;
    let edge: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let same: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok((Estimate::from_samples(&edge), Estimate::from_samples(&same)))
}

/// Overlap report by the exact or the Monte Carlo path.
pub fn overlap_report(
    wg: &WeightedGraphView,
    exact: bool,
    replicas: usize,
    kind: SamplerKind,
    stream: &RngStream,
    cap: usize,
) -> Result<OverlapReport> {
    if exact {
        let edge = Estimate::exact(edge_overlap_exact(wg)?);
        let tree = match tree_overlap_exact(wg, cap) {
            Ok(g) => Some(Estimate::exact(g)),
            Err(Error::TooLarge(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(OverlapReport {
            beta: wg.beta,
            exact: true,
            edge_overlap: edge,
            tree_overlap: tree,
            replicas: 0,
        })
    } else {
        let (edge, tree) = edge_overlap_mc(wg, replicas, kind, stream)?;
        Ok(OverlapReport {
            beta: wg.beta,
            exact: false,
            edge_overlap: edge,
            tree_overlap: Some(tree),
            replicas,
        })
    }
}

/// Total length `L(T) = Σ_{e∈T} ω_e`.
pub fn tree_length(t: &SpanningTree, env: &Environment) -> f64 {
    env.hamiltonian(t.triples().iter().map(|x| x.0))
}

/// `E[L(T)] = Σ_e ω_e P(e ∈ T)` with Kirchhoff marginals.
pub fn expected_length_exact(wg: &WeightedGraphView) -> Result<f64> {
    let p = edge_marginals(wg)?;
    Ok(p.iter().zip(wg.env.omega()).map(|(p, w)| p * w).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_complete, build_path};

    #[test]
    fn ust_overlap_on_triangle() {
        let g = build_complete(3).unwrap();
        let env = Environment::fixed(vec![0.0; 3]);
        let wg = WeightedGraphView::new(&g, &env, 0.0).unwrap();
        assert!((edge_overlap_exact(&wg).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!((tree_overlap_exact(&wg, 10).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let (e, t) = edge_overlap_mc(&wg, 20_000, SamplerKind::Wilson, &RngStream::new(1, "ov", 0)).unwrap();
        assert!((e.mean - 4.0 / 3.0).abs() < 3.0 * e.stderr);
        assert!((t.mean - 1.0 / 3.0).abs() < 4.0 * t.stderr);
    }

    #[test]
    fn tree_graph_overlap_is_n_minus_one() {
        let g = build_path(7).unwrap();
        let env = Environment::fixed(vec![0.3; 6]);
        let wg = WeightedGraphView::new(&g, &env, 2.0).unwrap();
        assert!((edge_overlap_exact(&wg).unwrap() - 6.0).abs() < 1e-9);
        let (e, _) = edge_overlap_mc(&wg, 10, SamplerKind::Wilson, &RngStream::new(1, "ov", 0)).unwrap();
        assert_eq!((e.mean, e.stderr), (6.0, 0.0));
        assert!((expected_length_exact(&wg).unwrap() - 1.8).abs() < 1e-9);
    }

    #[test]
    fn mc_overlap_is_worker_count_independent() {
        let g = build_complete(6).unwrap();
        let env = Environment::fixed((0..15).map(|e| e as f64 / 15.0).collect());
        let wg = WeightedGraphView::new(&g, &env, 3.0).unwrap();
        let s = RngStream::new(4, "ov", 0);
        let run = |k| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .unwrap()
                .install(|| edge_overlap_mc(&wg, 200, SamplerKind::Wilson, &s).unwrap())
        };
        assert_eq!(run(1), run(3));
    }
}
