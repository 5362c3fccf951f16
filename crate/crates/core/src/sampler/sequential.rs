//! Sequential sampler for large `β`.
//!
//! Edges are decided in increasing order of ω. By the spatial Markov property, given the
//! decisions so far, edge `e` is in the tree with probability `w(e) R_eff(e)` in the
//! graph where accepted edges are contracted and rejected edges deleted. Undecided
//! edges with `ω_f > ω_e + K/β` carry relative conductance below `e^{-K}`, so they are
//! left out of the resistance computation; with `K = 40 + ln m` the total error over all
//! decisions is below `e^{-40}` in total variation. Resistances come from star–mesh
//! elimination, which involves no subtractions and therefore stays accurate when the
//! retained conductances span `e^{K}`.

use std::collections::HashMap;

use crate::electric::effective_conductance_by_elimination;
use crate::environment::{CompleteEnvironment, Environment};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, MultiGraph, SpanningTree, UnionFind, VertexId};
use crate::rng::RngStream;

/// Accuracy margin of the conductance window, added to `ln m`.
pub const WINDOW_MARGIN: f64 = 40.0;

/// Largest window component handled by dense elimination.
pub const MAX_WINDOW_NODES: usize = 600;

/// Width `K / β` of the conductance window for `m` edges.
pub fn window_width(m: usize, beta: f64) -> f64 {
    (WINDOW_MARGIN + (m.max(2) as f64).ln()) / beta
}

type SortedEdge = (f64, EdgeId, VertexId, VertexId);

/// Edges sorted by `(ω, id)`; for implicit `K_n` only the edges below a growing
/// threshold are materialised.
struct EdgeSource<'a> {
    list: Vec<SortedEdge>,
    /// Every edge with `ω ≤ covered` is in `list`.
    covered: f64,
    complete: Option<(&'a CompleteEnvironment, f64)>,
}

impl<'a> EdgeSource<'a> {
    fn explicit(g: &MultiGraph, env: &Environment) -> Self {
        let mut list: Vec<SortedEdge> = g
            .edges()
            .iter()
            .enumerate()
            .map(|(e, &(u, v))| (env.value(e), e, u, v))
            .collect();
        list.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        EdgeSource {
            list,
            covered: f64::INFINITY,
            complete: None,
        }
    }

    fn complete(kn: &'a CompleteEnvironment) -> Result<Self> {
        let n = kn.n() as f64;
        let q = (2.0 * n.ln().max(1.0) / n).min(1.0);
        let mut s = EdgeSource {
            list: Vec::new(),
            covered: f64::NEG_INFINITY,
            complete: Some((kn, q / 2.0)),
        };
        s.extend()?;
        Ok(s)
    }

    /// Double the quantile of the threshold. Returns false when nothing is left.
    fn extend(&mut self) -> Result<bool> {
        let Some((kn, q)) = self.complete else {
            return Ok(false);
        };
        if self.covered == f64::INFINITY {
            return Ok(false);
        }
        let q = (2.0 * q).min(1.0);
        let threshold = if q >= 1.0 {
            f64::INFINITY
        } else {
            kn.law().inverse_cdf(q)?
        };
        let old = self.covered;
        self.list
            .extend(kn.edges_below(threshold).into_iter().filter(|x| x.0 > old));
        self.covered = threshold;
        self.complete = Some((kn, q));
        Ok(true)
    }

    fn ensure(&mut self, t: f64) -> Result<()> {
        while self.covered < t {
            if !self.extend()? {
                break;
            }
        }
        Ok(())
    }
}

fn sample_from_source(
    n: usize,
    m: usize,
    src: &mut EdgeSource,
    beta: f64,
    rng: &mut RngStream,
) -> Result<SpanningTree> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::invalid("the sequential sampler needs 0 < β < ∞"));
    }
    if n <= 1 {
        return SpanningTree::from_triples(n.max(1), Vec::new());
    }
    let width = window_width(m, beta);
    let mut uf = UnionFind::new(n);
    let mut accepted = Vec::with_capacity(n - 1);
    let mut pos = 0;
    while accepted.len() + 1 < n {
        if pos >= src.list.len() {
            if !src.extend()? {
                return Err(Error::Disconnected);
            }
            continue;
        }
        let (w, e, u, v) = src.list[pos];
        pos += 1;
        let (ru, rv) = (uf.find(u), uf.find(v));
        if ru == rv {
            continue;
        }
        src.ensure(w + width)?;
        let p = acceptance_probability(&src.list[pos..], &mut uf, ru, rv, w, w + width, beta)?;
        if rng.uniform() < p {
            uf.union(u, v);
            accepted.push((e, u, v));
        }
    }
    Ok(SpanningTree::from_triples_unchecked(n, accepted))
}

/// `1 / (1 + C)` where `C` is the effective conductance between the clusters `ru` and
/// `rv` through the window edges, with conductances relative to the current edge.
fn acceptance_probability(
    rest: &[SortedEdge],
    uf: &mut UnionFind,
    ru: usize,
    rv: usize,
    w: f64,
    limit: f64,
    beta: f64,
) -> Result<f64> {
    let mut local: HashMap<usize, usize> = HashMap::new();
    let id = |x: usize, local: &mut HashMap<usize, usize>| {
        let k = local.len();
        *local.entry(x).or_insert(k)
    };
    id(ru, &mut local);
    id(rv, &mut local);
    let mut wedges = Vec::new();
    for &(wf, _, a, b) in rest {
        if wf > limit {
            break;
        }
        let (ra, rb) = (uf.find(a), uf.find(b));
        if ra != rb {
            let (la, lb) = (id(ra, &mut local), id(rb, &mut local));
            wedges.push((la, lb, (-beta * (wf - w)).exp()));
        }
    }
    let k = local.len();
    // Restrict to the component of the first cluster.
    let mut adj = vec![Vec::new(); k];
    for &(a, b, _) in &wedges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut comp = vec![usize::MAX; k];
    let mut stack = vec![0];
    let mut members = Vec::new();
    comp[0] = 0;
    while let Some(x) = stack.pop() {
        members.push(x);
        for &y in &adj[x] {
            if comp[y] == usize::MAX {
                comp[y] = 0;
                stack.push(y);
            }
        }
    }
    if comp[1] == usize::MAX {
        return Ok(1.0);
    }
    if members.len() > MAX_WINDOW_NODES {
        return Err(Error::TooLarge(format!(
            "conductance window spans {} clusters; use a walk-based sampler",
            members.len()
        )));
    }
    members.sort_unstable();
    let pos: HashMap<usize, usize> = members.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let mut cond = vec![vec![0.0; members.len()]; members.len()];
    for &(a, b, c) in &wedges {
        if let (Some(&i), Some(&j)) = (pos.get(&a), pos.get(&b)) {
            cond[i][j] += c;
            cond[j][i] += c;
        }
    }
    let c = effective_conductance_by_elimination(cond, pos[&0], pos[&1]);
    Ok(1.0 / (1.0 + c))
}

/// Sequential sample on an explicit graph.
pub fn sequential_sample(
    g: &MultiGraph,
    env: &Environment,
    beta: f64,
    rng: &mut RngStream,
) -> Result<SpanningTree> {
    if env.len() != g.m() {
        return Err(Error::invalid("environment does not match the graph"));
    }
    let mut src = EdgeSource::explicit(g, env);
    sample_from_source(g.n(), g.m(), &mut src, beta, rng)
}

/// Sequential sample on `K_n` with an implicit environment.
pub fn sequential_sample_complete(
    kn: &CompleteEnvironment,
    beta: f64,
    rng: &mut RngStream,
) -> Result<SpanningTree> {
    let mut src = EdgeSource::complete(kn)?;
    sample_from_source(kn.n(), kn.m(), &mut src, beta, rng)
}

/// Expected number of undecided edges in a window at the scale of the heaviest tree
/// edges, from the sorted ω values. Used to choose between samplers.
pub fn window_load(sorted_omega: &[f64], n: usize, beta: f64) -> f64 {
    if sorted_omega.is_empty() || n < 2 || beta <= 0.0 {
        return f64::INFINITY;
    }
    let i = (n - 2).min(sorted_omega.len() - 1);
    let x = sorted_omega[i];
    let hi = x + window_width(sorted_omega.len(), beta);
    let end = sorted_omega.partition_point(|&w| w <= hi);
    (end - i) as f64
}

/// [`window_load`] for `K_n` under its disorder law.
pub fn window_load_complete(kn: &CompleteEnvironment, beta: f64) -> Result<f64> {
    if kn.n() < 2 || beta <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let m = kn.m() as f64;
    let law = kn.law();
    let q = ((kn.n() - 1) as f64 / m).min(1.0);
    let x = law.inverse_cdf(q.min(1.0 - 1e-12))?;
    let hi = x + window_width(kn.m(), beta);
    Ok(m * (law.cdf(hi)? - q).max(0.0))
}
