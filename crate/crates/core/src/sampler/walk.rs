//! Random-walk kernels, loop erasure, Wilson's algorithm and Aldous–Broder.

use crate::environment::{CompleteEnvironment, OmegaReader};
use crate::error::{Error, Result};
use crate::graph::{complete_edge_id, EdgeId, MultiGraph, SpanningTree, VertexId};
use crate::rng::RngStream;

/// Default cap on the total number of walk steps of one sampler call.
pub const STEP_CAP: u64 = 1_000_000_000;

/// One step of the (non-lazy) weighted random walk: from `u`, move along edge `e` with
/// probability `w(e) / w(u)`.
pub trait WalkKernel {
    fn n(&self) -> usize;
    /// Returns the next vertex and the edge used.
    fn step(&mut self, u: VertexId, rng: &mut RngStream) -> (VertexId, EdgeId);
}

/// Walk kernel of an explicit weighted multigraph, by inversion of per-vertex
/// cumulative weights.
#[derive(Clone, Debug)]
pub struct ExplicitKernel {
    offsets: Vec<usize>,
    targets: Vec<(VertexId, EdgeId)>,
    cumulative: Vec<f64>,
}

impl ExplicitKernel {
    /// `weights` may be rescaled; isolated vertices are rejected.
    pub fn new(g: &MultiGraph, weights: &[f64]) -> Result<Self> {
        let mut offsets = Vec::with_capacity(g.n() + 1);
        let mut targets = Vec::with_capacity(2 * g.m());
        let mut cumulative = Vec::with_capacity(2 * g.m());
        offsets.push(0);
        for v in 0..g.n() {
            let mut acc = 0.0;
            for &(w, e) in g.neighbors(v) {
                acc += weights[e];
                targets.push((w, e));
                cumulative.push(acc);
            }
            if g.n() > 1 && !(acc > 0.0) {
                return Err(Error::invalid(format!("vertex {v} has no positive-weight edge")));
            }
            offsets.push(targets.len());
        }
        Ok(ExplicitKernel {
            offsets,
            targets,
            cumulative,
        })
    }

    /// Total weight `w(u)` in the kernel's units.
    pub fn total(&self, u: VertexId) -> f64 {
        let hi = self.offsets[u + 1];
        if hi == self.offsets[u] {
            0.0
        } else {
            self.cumulative[hi - 1]
        }
    }
}

impl WalkKernel for ExplicitKernel {
    fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    fn step(&mut self, u: VertexId, rng: &mut RngStream) -> (VertexId, EdgeId) {
        let (lo, hi) = (self.offsets[u], self.offsets[u + 1]);
        let cum = &self.cumulative[lo..hi];
        let x = rng.uniform() * cum[cum.len() - 1];
        let i = cum.partition_point(|&c| c <= x).min(cum.len() - 1);
        self.targets[lo + i]
    }
}

/// Walk kernel of `K_n` with an implicit environment, by rejection: propose a uniform
/// neighbour and accept with probability `exp(-β (ω - ω_floor))`.
pub struct CompleteKernel<'a> {
    reader: OmegaReader<'a>,
    n: usize,
    beta: f64,
    floor: f64,
}

impl<'a> CompleteKernel<'a> {
    pub fn new(env: &'a CompleteEnvironment, beta: f64) -> Result<Self> {
        let floor = env.law().support_min().ok_or_else(|| {
            Error::Unsupported("implicit K_n walks need a law bounded below".into())
        })?;
        if env.n() < 2 {
            return Err(Error::invalid("walk on K_1"));
        }
        Ok(CompleteKernel {
            reader: env.reader(),
            n: env.n(),
            beta,
            floor,
        })
    }
}

impl WalkKernel for CompleteKernel<'_> {
    fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn step(&mut self, u: VertexId, rng: &mut RngStream) -> (VertexId, EdgeId) {
        loop {
            let mut v = rng.below(self.n - 1);
            if v >= u {
                v += 1;
            }
            let omega = self.reader.omega(u, v);
            if rng.uniform() < (-self.beta * (omega - self.floor)).exp() {
                return (v, complete_edge_id(self.n, u, v));
            }
        }
    }
}

/// A walk trajectory together with the label of the stream that generated it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkPath {
    pub vertices: Vec<VertexId>,
    pub seed: u64,
    pub stream: String,
    pub index: u64,
}

impl WalkPath {
    /// The chronological loop erasure of this trajectory.
    pub fn loop_erased(&self) -> WalkPath {
        WalkPath {
            vertices: loop_erase(&self.vertices).expect("walk paths are nonempty"),
            seed: self.seed,
            stream: self.stream.clone(),
            index: self.index,
        }
    }
}

/// Lazy walk: hold with probability 1/2, otherwise take a kernel step. Stops as soon as
/// `stop(vertex, steps)` holds (checked at the start as well).
pub fn lazy_random_walk<K: WalkKernel>(
    kernel: &mut K,
    start: VertexId,
    mut stop: impl FnMut(VertexId, usize) -> bool,
    rng: &mut RngStream,
    step_cap: u64,
) -> Result<WalkPath> {
    if start >= kernel.n() {
        return Err(Error::invalid(format!("start {start} out of range")));
    }
    let mut path = vec![start];
    let mut u = start;
    let mut steps = 0usize;
    while !stop(u, steps) {
        if steps as u64 >= step_cap {
            return Err(Error::NonTermination(step_cap));
        }
        if rng.uniform() >= 0.5 {
            u = kernel.step(u, rng).0;
        }
        steps += 1;
        path.push(u);
    }
    Ok(WalkPath {
        vertices: path,
        seed: rng.master(),
        stream: rng.tag().to_string(),
        index: rng.index(),
    })
}

/// Chronological loop erasure: `σ_0 = X_0` and `σ_{i+1} = X_{j+1}` where `j` is the last
/// visit of `σ_i`; stops once `σ_i` is the final vertex.
pub fn loop_erase(path: &[VertexId]) -> Result<Vec<VertexId>> {
    if path.is_empty() {
        return Err(Error::invalid("loop erasure of an empty path"));
    }
    let mut last = std::collections::HashMap::with_capacity(path.len());
    for (i, &x) in path.iter().enumerate() {
        last.insert(x, i);
    }
    let mut out = vec![path[0]];
    let mut j = last[&path[0]];
    while j + 1 < path.len() {
        let next = path[j + 1];
        out.push(next);
        j = last[&next];
    }
    Ok(out)
}

/// Order in which Wilson's algorithm starts its walks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VertexOrder {
    /// `0, 1, ..., n-1`.
    Natural,
    /// A uniformly random permutation drawn from the sampler's stream.
    Random,
    Given(Vec<VertexId>),
}

fn resolve_order(order: &VertexOrder, n: usize, rng: &mut RngStream) -> Result<Vec<VertexId>> {
    match order {
        VertexOrder::Natural => Ok((0..n).collect()),
        VertexOrder::Random => {
            let mut o: Vec<VertexId> = (0..n).collect();
            rng.shuffle(&mut o);
            Ok(o)
        }
        VertexOrder::Given(o) => {
            let mut seen = vec![false; n];
            for &v in o {
                if v >= n || std::mem::replace(&mut seen[v], true) {
                    return Err(Error::invalid("vertex order is not a permutation"));
                }
            }
            if o.len() != n {
                return Err(Error::invalid("vertex order is not a permutation"));
            }
            Ok(o.clone())
        }
    }
}

/// Wilson's algorithm: loop-erased walks from each vertex (in `order`) until they hit
/// the growing tree, which initially holds only `root`.
///
/// The walk overwrites its last exit edge at every vertex, which performs the
/// chronological loop erasure on the fly.
pub fn wilson_with_kernel<K: WalkKernel>(
    kernel: &mut K,
    root: VertexId,
    order: &VertexOrder,
    rng: &mut RngStream,
    step_cap: u64,
) -> Result<SpanningTree> {
    let n = kernel.n();
    if root >= n {
        return Err(Error::invalid(format!("root {root} out of range")));
    }
    let order = resolve_order(order, n, rng)?;
    let mut in_tree = vec![false; n];
    in_tree[root] = true;
    let mut next = vec![(0usize, 0usize); n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut steps = 0u64;
    for &start in &order {
        let mut u = start;
        while !in_tree[u] {
            next[u] = kernel.step(u, rng);
            u = next[u].0;
            steps += 1;
            if steps > step_cap {
                return Err(Error::NonTermination(step_cap));
            }
        }
        let mut u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            let (w, e) = next[u];
            edges.push((e, u.min(w), u.max(w)));
            u = w;
        }
    }
    Ok(SpanningTree::from_triples_unchecked(n, edges))
}

/// Aldous–Broder: walk from `start` until every vertex is visited; the first-entrance
/// edges form the tree.
pub fn aldous_broder_with_kernel<K: WalkKernel>(
    kernel: &mut K,
    start: VertexId,
    rng: &mut RngStream,
    step_cap: u64,
) -> Result<SpanningTree> {
    let n = kernel.n();
    if start >= n {
        return Err(Error::invalid(format!("start {start} out of range")));
    }
    let mut visited = vec![false; n];
    visited[start] = true;
    let mut remaining = n - 1;
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut u = start;
    let mut steps = 0u64;
    while remaining > 0 {
        let (w, e) = kernel.step(u, rng);
        steps += 1;
        if steps > step_cap {
            return Err(Error::NonTermination(step_cap));
        }
        if !visited[w] {
            visited[w] = true;
            remaining -= 1;
            edges.push((e, u.min(w), u.max(w)));
        }
        u = w;
    }
    Ok(SpanningTree::from_triples_unchecked(n, edges))
}
