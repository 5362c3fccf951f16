//! Local balls of trees, tree-map counts and the Poisson-backbone reference.

use std::collections::VecDeque;

use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use super::Estimate;
use crate::environment::WeightedGraphView;
use crate::error::{Error, Result};
use crate::graph::{RootedTree, SpanningTree, VertexId};
use crate::rng::RngStream;
use crate::sampler::{sample_tree, SamplerKind};

/// The ball of radius `r` around a root, as a rooted tree with a canonical code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalBall {
    pub tree: RootedTree,
    pub radius: usize,
    /// Rooted-isomorphism key.
    pub code: String,
    /// Original vertex of every ball vertex (empty for synthetic balls).
    pub vertices: Vec<VertexId>,
}

impl LocalBall {
    fn new(tree: RootedTree, radius: usize, vertices: Vec<VertexId>) -> Self {
        let code = tree.canonical_code();
        LocalBall {
            tree,
            radius,
            code,
            vertices,
        }
    }
}

/// The closed ball `B_T(v, r)`, grown breadth-first.
pub fn local_ball(t: &SpanningTree, v: VertexId, r: usize) -> Result<LocalBall> {
    if v >= t.n() {
        return Err(Error::invalid(format!("root {v} out of range")));
    }
    let adj = t.adjacency();
    let mut tree = RootedTree::singleton();
    let mut vertices = vec![v];
    let mut seen = std::collections::HashSet::from([v]);
    let mut queue = VecDeque::from([(v, 0usize, 0usize)]);
    while let Some((x, local, depth)) = queue.pop_front() {
        if depth == r {
            continue;
        }
        for &(y, _) in &adj[x] {
            if seen.insert(y) {
                let id = tree.add_child(local);
                vertices.push(y);
                queue.push_back((y, id, depth + 1));
            }
        }
    }
    Ok(LocalBall::new(tree, r, vertices))
}

pub fn rooted_isomorphic(a: &LocalBall, b: &LocalBall) -> bool {
    a.code == b.code
}

/// Number of injective maps from the pattern `t` into the rooted graph `(adj, root)`
/// sending root to root and edges to edges, by backtracking.
pub fn count_tree_maps(adj: &[Vec<usize>], root: usize, t: &RootedTree) -> u64 {
    if root >= adj.len() || t.is_empty() {
        return 0;
    }
    // Pattern vertices in index order: every parent precedes its children.
    let mut parent = vec![usize::MAX; t.len()];
    for v in 0..t.len() {
        for &c in t.children(v) {
            parent[c] = v;
        }
    }
    let mut image = vec![usize::MAX; t.len()];
    let mut used = vec![false; adj.len()];
    image[0] = root;
    used[root] = true;

    fn rec(
        i: usize,
        adj: &[Vec<usize>],
        parent: &[usize],
        image: &mut [usize],
        used: &mut [bool],
    ) -> u64 {
        if i == image.len() {
            return 1;
        }
        let mut total = 0;
        let p = image[parent[i]];
        for &y in &adj[p] {
            if !used[y] {
                used[y] = true;
                image[i] = y;
                total += rec(i + 1, adj, parent, image, used);
                used[y] = false;
            }
        }
        total
    }
    rec(1, adj, &parent, &mut image, &mut used)
}

/// Path on `k ≥ 1` vertices rooted at an end.
pub fn pattern_path(k: usize) -> RootedTree {
    let mut t = RootedTree::singleton();
    let mut last = 0;
    for _ in 1..k {
        last = t.add_child(last);
    }
    t
}

/// Star on `k ≥ 1` vertices rooted at its centre.
pub fn pattern_star(k: usize) -> RootedTree {
    let mut t = RootedTree::singleton();
    for _ in 1..k {
        t.add_child(0);
    }
    t
}

/// Ball of radius `r` of the Poisson backbone: an infinite path from the root with an
/// independent Poisson(1) Galton–Watson tree attached at every backbone vertex.
pub fn sample_poisson_backbone_ball(r: usize, rng: &mut RngStream) -> Result<LocalBall> {
    if r == 0 {
        return Err(Error::invalid("backbone balls need r >= 1"));
    }
    let poisson = Poisson::new(1.0).expect("valid Poisson parameter");
    let mut tree = RootedTree::singleton();
    // (vertex, depth, is_backbone)
    let mut queue = VecDeque::from([(0usize, 0usize, true)]);
    while let Some((x, depth, backbone)) = queue.pop_front() {
        if depth == r {
            continue;
        }
        if backbone {
            let b = tree.add_child(x);
            queue.push_back((b, depth + 1, true));
        }
        let k = poisson.sample(rng) as usize;
        for _ in 0..k {
            let c = tree.add_child(x);
            queue.push_back((c, depth + 1, false));
        }
    }
    Ok(LocalBall::new(tree, r, Vec::new()))
}

/// Empirical tree-map moment against the Poisson-backbone reference.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeMomentReport {
    pub pattern: String,
    pub pattern_size: usize,
    /// `E[N(T, t)]` at a uniformly chosen root.
    pub estimate: Estimate,
    /// `E[N(𝒫, t)]` by simulation of the backbone.
    pub reference: Estimate,
    /// The exact backbone value `|t|`.
    pub reference_exact: f64,
}

/// Sample `samples` trees (and as many backbone balls) and compare the tree-map counts
/// of every pattern. Tree `i` uses `stream.substream("tree", i)`, ball `i` uses
/// `stream.substream("backbone", i)`.
pub fn tree_moment_report(
    wg: &WeightedGraphView,
    patterns: &[RootedTree],
    samples: usize,
    kind: SamplerKind,
    stream: &RngStream,
) -> Result<Vec<TreeMomentReport>> {
    if samples == 0 || patterns.is_empty() {
        return Err(Error::invalid("tree moments need samples and patterns"));
    }
    let radius = patterns
        .iter()
        .map(|t| t.depths().into_iter().max().unwrap_or(0))
        .max()
        .unwrap_or(0)
        .max(1);
    let counts = |adj: &[Vec<usize>]| -> Vec<f64> {
        patterns.iter().map(|t| count_tree_maps(adj, 0, t) as f64).collect()
    };
    let tree_counts: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.substream("tree", i as u64);
            let t = sample_tree(wg, kind, &mut rng)?;
            let v = rng.below(t.n());
            Ok(counts(&local_ball(&t, v, radius)?.tree.adjacency()))
        })
        .collect::<Result<_>>()?;
    let ref_counts: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.substream("backbone", i as u64);
            Ok(counts(&sample_poisson_backbone_ball(radius, &mut rng)?.tree.adjacency()))
        })
        .collect::<Result<_>>()?;
    Ok(patterns
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let a: Vec<f64> = tree_counts.iter().map(|c| c[k]).collect();
            let b: Vec<f64> = ref_counts.iter().map(|c| c[k]).collect();
            TreeMomentReport {
                pattern: t.canonical_code(),
                pattern_size: t.len(),
                estimate: Estimate::from_samples(&a),
                reference: Estimate::from_samples(&b),
                reference_exact: t.len() as f64,
            }
        })
        .collect())
}
